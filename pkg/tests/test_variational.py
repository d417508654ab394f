import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_lab.errors import DomainError, InvalidSpecError, PreconditionError, UnsupportedSpecError
from orlicz_lab.grid import BoxDomain, GridFunction
from orlicz_lab.nfunc import NFunctionSpec
from orlicz_lab.variational import (
    b_coercivity_check, compactness_probe, convexity_inequality_check, derivative_bound_check,
    e_norm, embedding_constant, energy, energy_sandwich_check, find_critical_points,
    fountain_diagnostics, grad_energy, norm_bound_check, prototype, sine_ladder, subspace_lk,
)
from orlicz_lab.variational.checks import random_unit_directions
from orlicz_lab.variational.problem import ProblemSpec, euclidean_gradient, hessian

seeds = st.integers(0, 10_000)


@pytest.fixture(scope="module")
def ps():
    return prototype()


@pytest.fixture(scope="module")
def solved(ps):
    return find_critical_points(ps, count_target=3, seeds=40, seed=0)


def smooth(ps, seed, scale=1.0):
    ladder = sine_ladder(ps.domain, 12)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(ladder.size) / np.arange(1, ladder.size + 1)
    return GridFunction(ps.domain, scale * ladder.combine(c))


def hat_on(dom):
    return dom.sample(lambda x: np.maximum(0.0, 1 - np.abs(x) / 2))


# --- problem data -----------------------------------------------------------

def test_prototype_validates(ps):
    checks = ps.validate()
    assert checks["m1_basic"] and checks["mu_below_m0"]


def test_preconditions():
    base = prototype(n=16)
    dom = base.domain
    with pytest.raises(PreconditionError):
        ProblemSpec(base.nfun, base.fp, dom, base.V, dom.sample(lambda x: -np.exp(-x ** 2)),
                    1.5, 2.0)
    with pytest.raises(PreconditionError):
        ProblemSpec(base.nfun, base.fp, dom, dom.sample(lambda x: x), base.xi, 1.5, 2.0)
    with pytest.raises(PreconditionError):
        ProblemSpec(base.nfun, base.fp, dom, base.V, base.xi, 2.5, 2.0)
    with pytest.raises(DomainError):
        base.with_lambda(3.0)
    with pytest.raises(PreconditionError, match=r"\(M1\)"):
        ProblemSpec(base.nfun, base.fp, dom, base.V, base.xi, 1.5, 3.5).validate()


# --- energy -----------------------------------------------------------------

def test_energy_of_zero(ps):
    e = energy(ps, ps.domain.zeros())
    assert (e.G, e.Psi, e.B, e.A, e.I) == (0, 0, 0, 0, 0)


@given(seeds)
def test_energy_even(seed):
    p = prototype()
    u = smooth(p, seed)
    assert energy(p, -u) == energy(p, u)


def test_energy_against_independent_sums(ps):
    u = hat_on(ps.domain)
    x, w, v = ps.domain.points[:, 0], ps.domain.cell_volume, u.values
    G = 0.0
    for i in range(len(v)):
        r = np.abs(x - x[i])
        m = r > 0
        G += np.sum(np.abs((v[i] - v[m]) / r[m] ** 0.5) ** 3 * w * w / r[m])
    Psi = np.sum((1 + x ** 2) * np.abs(v) ** 3 * w)
    B = np.sum(np.exp(-x ** 2) * np.abs(v) ** 1.5 * w)
    e = energy(ps, u)
    assert e.G == pytest.approx(G, rel=1e-12)
    assert e.Psi == pytest.approx(Psi, rel=1e-12)
    assert e.B == pytest.approx(B, rel=1e-12)
    assert e.I == pytest.approx(G + Psi - B, rel=1e-12)


# --- gradient ---------------------------------------------------------------

def test_gradient_of_zero(ps):
    assert np.all(grad_energy(ps, ps.domain.zeros()).values == 0)


@given(seeds)
def test_gradient_odd(seed):
    p = prototype()
    u = smooth(p, seed)
    np.testing.assert_allclose(grad_energy(p, -u).values, -grad_energy(p, u).values,
                               rtol=0, atol=1e-13)


@pytest.mark.parametrize("nfun", [NFunctionSpec.power(3), NFunctionSpec.power_sum(3, 4),
                                  NFunctionSpec.log_weighted(3)])
def test_gradient_central_differences(nfun):
    p = prototype(nfun=nfun)
    u = smooth(p, 1)
    g = grad_energy(p, u)
    rng = np.random.default_rng(2)
    h = 1e-5
    for _ in range(20):
        v = GridFunction(p.domain, rng.standard_normal(p.domain.size))
        v = v / math.sqrt(v.inner(v))
        fd = (energy(p, u + v * h).I - energy(p, u - v * h).I) / (2 * h)
        assert abs(fd - g.inner(v)) <= 1e-5 * (1 + abs(energy(p, u).I))


def test_hessian_matches_gradient_differences(ps):
    x = smooth(ps, 3).values
    H = hessian(ps, x)
    v = np.random.default_rng(4).standard_normal(x.size)
    h = 1e-6
    fd = (euclidean_gradient(ps, x + h * v) - euclidean_gradient(ps, x - h * v)) / (2 * h)
    assert np.linalg.norm(H @ v - fd) <= 1e-4 * np.linalg.norm(fd)


# --- inequality checks ------------------------------------------------------

def test_energy_sandwich_zero(ps):
    assert energy_sandwich_check(ps, ps.domain.zeros())["pass"]


@given(seeds, st.sampled_from([0.1, 0.3, 1.0, 3.0, 10.0]))
def test_energy_sandwich_random_and_scaled(seed, beta):
    p = prototype()
    assert energy_sandwich_check(p, smooth(p, seed, beta))["pass"]


def test_convexity_edge_cases(ps):
    u = smooth(ps, 5)
    same = convexity_inequality_check(ps, u, u)
    assert same["lhs"] == pytest.approx(0, abs=1e-12) and same["rhs"] == 0
    opposite = convexity_inequality_check(ps, u, -u)
    assert opposite["lhs"] == pytest.approx(opposite["rhs"], rel=1e-12)


@given(seeds, seeds)
def test_convexity_random_pairs(a, b):
    p = prototype(nfun=NFunctionSpec.power_sum(3, 4))
    assert convexity_inequality_check(p, smooth(p, a), smooth(p, b + 1))["pass"]


def test_convexity_skipped_without_m2():
    p = prototype(nfun=NFunctionSpec.power(1.2))
    p = ProblemSpec(p.nfun, p.fp, p.domain, p.V, p.xi, 1.05, 1.1)
    rep = convexity_inequality_check(p, smooth(p, 0), smooth(p, 1))
    assert rep["skipped"] and rep["pass"] is None and "M2" in rep["notice"]


def test_derivative_bound(ps):
    C = embedding_constant(ps)
    assert derivative_bound_check(ps, ps.domain.zeros(), C)["proxy"] == 0
    for u in random_unit_directions(ps, 20, seed=7):
        rep = derivative_bound_check(ps, u, C)
        assert rep["norm"] == pytest.approx(1, rel=1e-8) and rep["pass"]


def test_unit_directions_have_unit_norm(ps):
    for v in random_unit_directions(ps, 5):
        assert e_norm(ps, v) == pytest.approx(1, rel=1e-9)


# --- ladder and fountain ----------------------------------------------------

def test_ladder_orthonormal(ps):
    ladder = sine_ladder(ps.domain, 24)
    assert np.abs(ladder.gram() - np.eye(24)).max() < 1e-12
    assert ladder.y_mask(3).sum() == 3 and ladder.z_mask(3).sum() == 22
    sq = sine_ladder(BoxDomain.square(0, 1, 8), 10)
    assert np.abs(sq.gram() - np.eye(10)).max() < 1e-12


def test_b_coercivity(ps):
    ladder = sine_ladder(ps.domain, 24)
    rep = b_coercivity_check(ps, ladder, 3)
    assert rep["positive"] and rep["homogeneity_error"] <= 1e-12
    with pytest.raises(InvalidSpecError):
        b_coercivity_check(ps.with_xi(ps.domain.zeros()), ladder, 3)


def test_b_coercivity_first_mode_direct():
    p = prototype()
    p = p.with_xi(p.domain.constant(1.0))
    ladder = sine_ladder(p.domain, 24)
    e1 = ladder.mode(1)
    direct = np.sum(np.abs(e1.values) ** 1.5 * e1.weights) / e_norm(p, e1) ** 1.5
    rep = b_coercivity_check(p, ladder, 1, samples=1)
    assert rep["c_H"] == pytest.approx(direct, rel=1e-10) and direct > 0


def test_subspace_lk_unit_norm_and_order(ps):
    ladder = sine_ladder(ps.domain, 24)
    l1, l2 = subspace_lk(ps, ladder, 1, draws=100), subspace_lk(ps, ladder, 2, draws=100)
    assert l1["value"] * 1.05 >= l2["value"]
    assert l1["unit_norm_error"] <= 1e-6
    with pytest.raises(InvalidSpecError):
        subspace_lk(ps, ladder, 24)


def test_fountain_signs_and_lambda_monotone(ps):
    ladder = sine_ladder(ps.domain, 24)
    rep = fountain_diagnostics(ps, ladder, 3, 2.5, samples=200)
    assert rep["signs_ok"] and rep["d_k_in_range"] and rep["a_k_monotone_in_lambda"]


def test_fountain_preconditions(ps):
    ladder = sine_ladder(ps.domain, 24)
    with pytest.raises(PreconditionError):
        fountain_diagnostics(ps, ladder, 2, 1.0, lk=0.5)
    p = ProblemSpec(NFunctionSpec.power(1.2), ps.fp, ps.domain, ps.V, ps.xi, 1.05, 1.1)
    p = ProblemSpec(p.nfun, p.fp, p.domain, p.V, p.xi, 1.5, 1.9)
    with pytest.raises(UnsupportedSpecError):
        fountain_diagnostics(p, ladder, 2, 2.5, lk=0.5)


# --- search -----------------------------------------------------------------

def test_search_finds_three_pairs(solved):
    sols = solved["solutions"]
    assert len(sols) >= 3
    assert solved["all_negative"] and solved["sorted_nondecreasing"]
    for s in sols:
        assert s.residual <= 1e-6 and s.deflation_distance >= 1e-3


def test_solutions_are_distinct_pairs(ps, solved):
    from orlicz_lab.grid import lmu_norm
    xs = [s.u for s in solved["solutions"]]
    for i, a in enumerate(xs):
        for b in xs[i + 1:]:
            assert lmu_norm(a - b, ps.mu) >= 1e-3 and lmu_norm(a + b, ps.mu) >= 1e-3


def test_residual_recheck(ps, solved):
    dirs = random_unit_directions(ps, 20, seed=3)
    for s in solved["solutions"]:
        g = grad_energy(ps, s.u)
        assert max(abs(g.inner(v)) for v in dirs) <= 1e-5


def test_search_without_source(ps):
    res = find_critical_points(ps.with_xi(ps.domain.zeros()), seeds=3)
    assert res["solutions"] == []


def test_search_requires_lambda_one(ps):
    with pytest.raises(PreconditionError):
        find_critical_points(ps.with_lambda(2.0))


def test_norm_bound_on_solutions(ps, solved):
    C = embedding_constant(ps)
    for s in solved["solutions"]:
        assert norm_bound_check(ps, s.u, C)["pass"]


def test_norm_bound_large_norm(ps):
    C = embedding_constant(ps)
    rep = norm_bound_check(ps, smooth(ps, 0, 5.0), C)
    assert rep["required"] and rep["pass"]


# --- compactness probes -----------------------------------------------------

def test_probe_needs_growing_potential(ps):
    flat = ProblemSpec(ps.nfun, ps.fp, ps.domain, ps.domain.constant(1.0), ps.xi, ps.p, ps.mu)
    with pytest.raises(PreconditionError):
        compactness_probe(flat, "translates")


def test_translates_decay():
    p = prototype(n=128, half_width=16.0)
    rep = compactness_probe(p, "translates")
    lmu = {r["shift"]: r["lmu"] for r in rep["rows"]}
    assert lmu[0.0] > lmu[4.0] > lmu[8.0]
    assert rep["decays"] and rep["decay_factor"] >= 2


def test_tail_mass(ps, solved):
    rep = compactness_probe(ps, "tails", solved["solutions"])
    assert rep["pass"] and all(r["tail_fraction"] < 1e-3 for r in rep["rows"])


def test_embedding_constant_stable_under_refinement():
    c64 = embedding_constant(prototype(n=64))
    c128 = embedding_constant(prototype(n=128))
    assert 0.5 <= c64 / c128 <= 2
