"""Batch inequality checks over sets of grid functions.

Every check returns a row ``{"name", "pass", "worst_slack", "count"}``.
``worst_slack`` is the smallest (right side - left side) seen, so a
negative value marks a violation. Skipped checks carry ``pass = None``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import RangeError, UnsupportedSpecError
from .grid import holder_check, luxemburg_norm, modular, orlicz_norm
from .nfunc import (NFunctionSpec, check_growth, estimate_indices, kepsilon_constant,
                    sobolev_table, xi0, xi1, young_gap)
from .sobolev import (FractionalParams, compose_lipschitz, gagliardo_seminorm,
                      norm_bundle, random_smooth, truncate, w_s1_comparison)

SLACK = 1e-8
TILDE_TARGETS = (0.1, 0.5, 0.9, 1.1, 2.0, 5.0)


def _row(name, slacks, count=None, **extra):
    slacks = list(slacks)
    worst = float(min(slacks)) if slacks else math.inf
    return {"name": name, "pass": bool(worst >= 0), "worst_slack": worst,
            "count": count if count is not None else len(slacks), **extra}


def skipped(name, reason):
    return {"name": name, "pass": None, "worst_slack": None, "count": 0,
            "skipped": True, "reason": reason}


def random_functions(domain, count, seed=0):
    rng = np.random.default_rng(seed)
    return [random_smooth(domain, rng) for _ in range(count)]


def young_inequality(spec: NFunctionSpec, count: int = 10_000, seed: int = 0) -> dict:
    """Young gap >= 0 on random pairs and = 0 at t = m(s)."""
    rng = np.random.default_rng(seed)
    lo, hi = spec.eval_range
    ls = rng.uniform(math.log10(lo) / 2, math.log10(hi) / 2, (2, count))
    s, t = 10.0 ** ls[0], spec.m(10.0 ** ls[1])
    gaps = young_gap(spec, s, t) + 1e-10 * (1 + s * t)
    eq = np.abs(young_gap(spec, s, spec.m(s))) / (1 + s * spec.m(s))
    return _row("young_inequality", np.append(gaps, 1e-8 - eq), count,
                equality_error=float(eq.max()))


def luxemburg_normalisation(us, M) -> dict:
    """modular(u/||u||) = 1 to within 1e-8."""
    sl = [SLACK - abs(modular(u / luxemburg_norm(u, M), M) - 1) for u in us if not u.is_zero()]
    return _row("luxemburg_normalisation", sl)


def modular_norm_sandwich(us, M, idx) -> dict:
    """xi0(||u||) <= modular(u) <= xi1(||u||)."""
    sl = []
    for u in us:
        r, n = modular(u, M), luxemburg_norm(u, M)
        tol = SLACK * max(1.0, r)
        sl += [r - float(xi0(idx, n)) + tol, float(xi1(idx, n)) - r + tol]
    return _row("modular_norm_sandwich", sl, len(us))


def orlicz_norm_modular_bound(us, M) -> dict:
    """Orlicz norm <= modular + 1."""
    return _row("orlicz_norm_modular_bound",
                [modular(u, M) + 1 + SLACK - orlicz_norm(u, M) for u in us])


def orlicz_luxemburg_equivalence(us, M) -> dict:
    """||u||_(M) <= Orlicz norm <= 2 ||u||_(M)."""
    sl = []
    for u in us:
        lux, orl = luxemburg_norm(u, M), orlicz_norm(u, M)
        tol = SLACK * max(1.0, lux)
        sl += [orl - lux + tol, 2 * lux - orl + tol]
    return _row("orlicz_luxemburg_equivalence", sl, len(us))


def holder_inequality(us, vs, M) -> dict:
    sl = []
    for u, v in zip(us, vs):
        rep = holder_check(u, v, M)
        sl.append(rep["rhs"] + SLACK - rep["lhs"])
    return _row("holder_inequality", sl)


def two_norm_equivalence(us, M, fp) -> dict:
    """(1/2)||u||_(s,M) <= |u|_(s,M) <= 2||u||_(s,M)."""
    sl = []
    for u in us:
        b = norm_bundle(u, M, fp)
        tol = SLACK * max(1.0, b.snorm)
        sl += [b.tilde_norm - 0.5 * b.snorm + tol, 2 * b.snorm - b.tilde_norm + tol]
    return _row("two_norm_equivalence", sl, len(us))


def tilde_power_sandwich(us, M, fp, idx, targets: Sequence[float] = TILDE_TARGETS) -> dict:
    """|u|^{m^0} <= rho~(u) <= |u|^{m0} below 1, exponents swapped above 1."""
    sl = []
    for u in us:
        base = norm_bundle(u, M, fp).tilde_norm
        for target in targets:
            b = norm_bundle(u * (target / base), M, fp)
            n = b.tilde_norm
            lo, hi = float(xi0(idx, n)), float(xi1(idx, n))
            tol = SLACK * max(1.0, b.rho_tilde)
            sl += [b.rho_tilde - lo + tol, hi - b.rho_tilde + tol]
    return _row("tilde_power_sandwich", sl, len(us) * len(targets))


def conjugate_power_absorption(M, fp, eps_values=(0.01, 1.0, 100.0), points: int = 4096) -> dict:
    """Mstar^{(d-s)/d} <= eps*Mstar + K_eps t at every sampled t."""
    try:
        tab = sobolev_table(M, fp.d, float(fp.s))
    except (UnsupportedSpecError, RangeError) as exc:
        return skipped("conjugate_power_absorption", str(exc))
    lo, hi = tab.t_range
    t = np.logspace(math.log10(lo), math.log10(hi), points)
    v = tab.value(t)
    e = (fp.d - fp.s) / fp.d
    sl, ks = [], {}
    for eps in eps_values:
        K = kepsilon_constant(M, fp.d, fp.s, eps)
        ks[str(eps)] = K
        gap = eps * v + K * t - v ** e
        sl.append(float(np.min(gap / np.maximum(1.0, v ** e))) + 1e-10)
    return _row("conjugate_power_absorption", sl, points * len(eps_values), K_eps=ks)


def lipschitz_contraction(us, M, fp, maps=None) -> dict:
    """rho_bar(f(u)/K) <= rho_bar(u) for 1-Lipschitz f with f(0) = 0."""
    maps = maps or [(np.sin, 1.0), (np.tanh, 1.0), (lambda t: 0.5 * t, 0.5)]
    sl = []
    for u in us:
        for f, K in maps:
            rep = compose_lipschitz(u, f, K, M, fp)
            sl.append(rep["modular"] + 1e-10 - rep["contracted_modular"])
    return _row("lipschitz_contraction", sl, len(us) * len(maps))


def truncation_monotonicity(us, M, fp, fractions=(0.25, 0.5, 1.0)) -> dict:
    """Truncating at level n never increases [u] or ||u||_(M)."""
    sl = []
    for u in us:
        semi, lux = gagliardo_seminorm(u, M, fp), luxemburg_norm(u, M)
        for frac in fractions:
            un = u.like(truncate(frac * u.max_abs())(u.values))
            tol = SLACK * max(1.0, semi + lux)
            sl += [semi - gagliardo_seminorm(un, M, fp) + tol,
                   lux - luxemburg_norm(un, M) + tol]
    return _row("truncation_monotonicity", sl, len(us) * len(fractions))


def ws1_bound(us, M, fp) -> dict:
    if fp.s_prime is None:
        return skipped("ws1_bound", "no s_prime configured")
    sl, omega = [], None
    for u in us:
        rep = w_s1_comparison(u, M, fp)
        omega = rep["omega_kind"]
        sl.append(rep["rhs"] * (1 + 1e-6) - rep["lhs"])
    return _row("ws1_bound", sl, omega=omega)


def growth_rows(M, mu, d, s) -> list:
    """Delta2, (M1) and (M2) as named checks; (M3) is reported but gates only."""
    rep = check_growth(M, mu, d, s)
    return [
        {"name": "(Delta2)", "pass": bool(rep.delta2), "worst_slack": None, "count": 1,
         "K": rep.K},
        {"name": "(M1)", "pass": bool(rep.M1), "worst_slack": None, "count": 1},
        {"name": "(M2)", "pass": bool(rep.M2), "worst_slack": None, "count": 1},
        {"name": "(M3)", "pass": None, "worst_slack": None, "count": 1,
         "informational": True, "holds": bool(rep.M3)},
    ]


def space_suite(M: NFunctionSpec, fp: FractionalParams, us: list, vs: list) -> list:
    """All checks that involve only M, fp and grid functions."""
    idx = estimate_indices(M, fp.d)
    return [
        young_inequality(M),
        luxemburg_normalisation(us, M),
        modular_norm_sandwich(us, M, idx),
        orlicz_norm_modular_bound(us, M),
        orlicz_luxemburg_equivalence(us, M),
        holder_inequality(us, vs, M),
        two_norm_equivalence(us, M, fp),
        tilde_power_sandwich(us[: max(1, len(us) // 4)], M, fp, idx),
        conjugate_power_absorption(M, fp),
        lipschitz_contraction(us, M, fp),
        truncation_monotonicity(us, M, fp),
        ws1_bound(us, M, fp),
    ]
