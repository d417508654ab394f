"""Sampled versions of the quantities l_k, rho_k, a_k, b_k, d_k on a subspace ladder."""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidSpecError, PreconditionError, UnsupportedSpecError
from ..grid import GridFunction
from .ladder import SubspaceLadder
from .problem import ProblemSpec, e_norm, e_norm_gradient, energy, lmu_gradient

DRAWS = 500
ASCENT_STEPS = 20
MONOTONE_SLACK = 0.05


def _draw(rng, ladder: SubspaceLadder, mask: np.ndarray) -> np.ndarray:
    """Random coefficients on the masked modes, decaying with mode rank."""
    idx = np.flatnonzero(mask)
    c = np.zeros(ladder.size)
    c[idx] = rng.standard_normal(idx.size) / np.arange(1, idx.size + 1)
    return c


def _ratio_and_grad(ps, ladder, c):
    x = ladder.combine(c)
    nrm, gn = e_norm_gradient(ps, x)
    lm, gl = lmu_gradient(ps, x)
    r = lm / nrm
    gx = (gl * nrm - lm * gn) / nrm ** 2
    return r, ladder.basis @ gx


def sup_lmu_ratio(ps: ProblemSpec, ladder: SubspaceLadder, mask: np.ndarray,
                  draws: int = DRAWS, steps: int = ASCENT_STEPS, rng=None) -> dict:
    """Approximate sup of ||u||_{L^mu} over {u in span(mask), ||u|| = 1}.

    Random draws pick a starting point; projected ascent on the unit
    coefficient sphere then climbs the scale-invariant ratio.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    best_r, best_c = -1.0, None
    first = np.zeros(ladder.size)
    first[np.flatnonzero(mask)[0]] = 1.0
    candidates = [first] + [_draw(rng, ladder, mask) for _ in range(draws - 1)]
    for c in candidates:
        x = ladder.combine(c)
        if not np.any(x):
            continue
        r = float(np.sum(np.abs(x) ** ps.mu) * ps.domain.cell_volume) ** (1 / ps.mu) / e_norm(ps, x)
        if r > best_r:
            best_r, best_c = r, c
    drawn = best_r
    c = best_c / np.linalg.norm(best_c)
    r, g = _ratio_and_grad(ps, ladder, c)
    eta = 0.3
    for _ in range(steps):
        g = np.where(mask, g, 0.0)
        t = g - (g @ c) * c
        tn = np.linalg.norm(t)
        if tn == 0:
            break
        while eta > 1e-8:
            trial = c + eta * t / tn
            trial /= np.linalg.norm(trial)
            rt, gt = _ratio_and_grad(ps, ladder, trial)
            if rt > r:
                c, r, g = trial, rt, gt
                eta *= 1.5
                break
            eta *= 0.5
        else:
            break
    x = ladder.combine(c)
    x = x / e_norm(ps, x)
    return {"value": float(r), "from_draws": float(drawn), "u": GridFunction(ps.domain, x),
            "unit_norm_error": abs(e_norm(ps, x) - 1.0)}


def subspace_lk(ps: ProblemSpec, ladder: SubspaceLadder, k: int, draws: int = DRAWS,
                steps: int = ASCENT_STEPS, seed: int = 0) -> dict:
    if not 1 <= k < ladder.size:
        raise InvalidSpecError(f"k must lie in [1, {ladder.size - 1}]")
    res = sup_lmu_ratio(ps, ladder, ladder.z_mask(k), draws, steps,
                        np.random.default_rng([seed, k]))
    res["k"] = k
    return res


def lk_table(ps: ProblemSpec, ladder: SubspaceLadder, ks, draws: int = DRAWS,
             steps: int = ASCENT_STEPS, seed: int = 0) -> dict:
    rows = [subspace_lk(ps, ladder, k, draws, steps, seed) for k in ks]
    vals = [r["value"] for r in rows]
    ok = all(b <= a * (1 + MONOTONE_SLACK) for a, b in zip(vals, vals[1:]))
    return {"k": list(ks), "l": vals, "non_increasing": bool(ok),
            "last_over_first": vals[-1] / vals[0],
            "unit_norm_error": max(r["unit_norm_error"] for r in rows)}


def coercivity_epsilon(ps: ProblemSpec, x: np.ndarray, norm: float) -> float:
    """Largest c with meas{xi |u|^p >= c ||u||^p} >= c, for one function."""
    a = ps.xi.values * np.abs(x) ** ps.p / norm ** ps.p
    a = np.sort(a)[::-1]
    meas = ps.domain.cell_volume * np.arange(1, a.size + 1)
    return float(np.max(np.minimum(a, meas)))


def b_coercivity_check(ps: ProblemSpec, ladder: SubspaceLadder, k: int,
                       samples: int = 200, seed: int = 0) -> dict:
    """Lower bounds for B on the unit sphere of Y_k, from random samples."""
    if not np.any(ps.xi.values > 0):
        raise InvalidSpecError("xi vanishes on the grid: B is identically zero")
    rng = np.random.default_rng([seed, k, 1])
    mask = ladder.y_mask(k)
    cs, eps, homog = [], [], 0.0
    for i in range(samples):
        c = ladder.mode(k).values if i == 0 else ladder.combine(_draw(rng, ladder, mask))
        nrm = e_norm(ps, c)
        x = c / nrm
        B = energy(ps, x).B
        cs.append(B)
        eps.append(coercivity_epsilon(ps, x, 1.0))
        B2 = energy(ps, 2 * x).B
        homog = max(homog, abs(B2 - 2 ** ps.p * B) / max(B2, 1e-300))
    c_H = float(min(cs))
    eps_k = float(min(eps))
    levels = [c_H * f for f in (0.25, 0.5, 1.0)]
    return {"k": k, "c_H": c_H, "eps_k": eps_k, "positive": bool(c_H > 0 and eps_k > 0),
            "B_over_norm_p_min": c_H, "homogeneity_error": homog,
            "lambda_levels": levels,
            "eps_squared_below_c_H": bool(eps_k ** 2 <= c_H * (1 + 1e-12))}


def _sphere_samples(ps, ladder, mask, radius, count, rng, fill_ball=False):
    out = []
    for _ in range(count):
        c = _draw(rng, ladder, mask)
        x = ladder.combine(c)
        r = radius * (rng.uniform() if fill_ball else 1.0)
        out.append(x * (r / e_norm(ps, x)))
    return out


def fountain_diagnostics(ps: ProblemSpec, ladder: SubspaceLadder, k: int, theta: float,
                         lk: float | None = None, samples: int = DRAWS, seed: int = 0) -> dict:
    idx = ps.indices
    m0, msup, p = idx.m0, idx.m_sup, ps.p
    if not msup > p:
        raise UnsupportedSpecError("need m^0 > p")
    if not theta > 2 ** (msup - 2):
        raise PreconditionError(f"need theta > 2^(m^0 - 2) = {2 ** (msup - 2):g}")
    if lk is None:
        lk = subspace_lk(ps, ladder, k, seed=seed)["value"]
    xin = ps.xi_norm
    rho = (4 * theta * xin * lk ** p) ** (1 / (msup - p))
    rng = np.random.default_rng([seed, k, 2])
    zmask, ymask = ladder.z_mask(k), ladder.y_mask(k)

    def parts(xs):
        e = [energy(ps, x) for x in xs]
        return np.array([a.A for a in e]), np.array([a.B for a in e])

    A, B = parts(_sphere_samples(ps, ladder, zmask, rho, samples, rng))
    a_k = {lam: float(np.min(A - lam * B)) for lam in (1.0, 2.0)}
    coer = b_coercivity_check(ps, ladder, k, seed=seed)
    eps = coer["eps_k"]
    cap = min(rho, 4 ** (-1 / (m0 - p)) * eps ** (2 / (m0 - p)), 1.0)
    r_k = 0.5 * cap
    Ay, By = parts(_sphere_samples(ps, ladder, ymask, r_k, samples, rng))
    b_k = {lam: float(np.max(Ay - lam * By)) for lam in (1.0, 2.0)}
    Ab, Bb = parts(_sphere_samples(ps, ladder, zmask, rho, samples - 1, rng, fill_ball=True))
    Ab, Bb = np.append(Ab, 0.0), np.append(Bb, 0.0)   # u = 0 lies in the ball
    d_k = {lam: float(np.min(Ab - lam * Bb)) for lam in (1.0, 2.0)}
    lower = -2 * xin * lk ** p * rho ** p
    lam = ps.lam
    return {
        "k": k, "theta": theta, "l_k": lk, "rho_k": rho, "r_k": r_k, "eps_k": eps,
        "xi_norm": xin, "a_k": a_k[lam], "b_k": b_k[lam], "d_k": d_k[lam],
        "a_k_by_lambda": a_k, "b_k_by_lambda": b_k, "d_k_by_lambda": d_k,
        "d_k_lower": lower, "rho_at_most_1": bool(rho <= 1),
        "signs_ok": bool(a_k[lam] > 0 > b_k[lam]),
        "d_k_in_range": bool(lower - 1e-8 <= d_k[lam] <= 1e-8),
        "a_k_monotone_in_lambda": bool(a_k[2.0] <= a_k[1.0]),
    }
