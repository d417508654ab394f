"""Inequality checks for the energy and the compactness probes."""

from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np

from ..errors import PreconditionError
from ..grid import GridFunction, lmu_norm
from ..nfunc import check_growth, xi0, xi1
from ..sobolev import bump
from .ladder import sine_ladder
from .problem import ProblemSpec, e_norm, e_norm_parts, energy, euclidean_gradient
from .fountain import sup_lmu_ratio

SLACK = 1e-8


def energy_sandwich_check(ps: ProblemSpec, u) -> dict:
    """xi0([u]) <= G <= xi1([u]) and the same sandwich for Psi and ||u||_(V,M)."""
    idx = ps.indices
    e = energy(ps, u)
    semi, weighted = e_norm_parts(ps, u)
    rows = {}
    for name, val, nrm in (("G", e.G, semi), ("Psi", e.Psi, weighted)):
        lo, hi = float(xi0(idx, nrm)), float(xi1(idx, nrm))
        tol = SLACK * max(1.0, val)
        rows[name] = {"lower": lo, "value": val, "upper": hi, "norm": nrm,
                      "pass": bool(lo - tol <= val <= hi + tol)}
    return {"rows": rows, "pass": all(r["pass"] for r in rows.values())}


@lru_cache(maxsize=32)
def _growth(spec, mu, d, s):
    return check_growth(spec, mu, d, s)


def convexity_inequality_check(ps: ProblemSpec, u, v) -> dict:
    """(1/2)A(u) + (1/2)A(v) - A((u+v)/2) >= A((u-v)/2), with A = G + Psi."""
    rep = _growth(ps.nfun, ps.mu, ps.fp.d, ps.fp.s)
    if not (rep.M2 and rep.delta2):
        return {"skipped": True, "pass": None,
                "notice": "needs (M2) and Delta2; verdicts: "
                          f"M2={rep.M2}, delta2={rep.delta2}"}
    x = _vals(u)
    y = _vals(v)
    A = lambda z: energy(ps, z).A
    lhs = 0.5 * A(x) + 0.5 * A(y) - A(0.5 * (x + y))
    rhs = A(0.5 * (x - y))
    return {"skipped": False, "lhs": lhs, "rhs": rhs, "slack": lhs - rhs,
            "pass": bool(lhs >= rhs - SLACK * max(1.0, abs(rhs)))}


def _vals(u):
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


def random_unit_directions(ps: ProblemSpec, count: int, seed: int = 0, modes: int = 16):
    """Random smooth directions v with ||v|| = 1."""
    ladder = sine_ladder(ps.domain, min(modes, ps.domain.size - 1))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.standard_normal(ladder.size) / np.arange(1, ladder.size + 1)
        x = ladder.combine(c)
        out.append(x / e_norm(ps, x))
    return out


def derivative_bound_bound(ps: ProblemSpec, norm_u: float, C: float) -> float:
    """Right-hand side of the bound on ||I'(u)||_{E*} in terms of ||u||."""
    idx = ps.indices
    m0, msup = idx.m0, idx.m_sup
    bar_low = msup / (msup - 1)     # conjugate lower index
    bar_up = m0 / (m0 - 1)          # conjugate upper index
    x1 = float(xi1(idx, norm_u))
    return (msup ** (1 / bar_low) * x1 ** (1 / bar_low) + msup ** (1 / bar_up) * x1 ** (1 / bar_up)
            + msup * x1 + 1.0 + 2 * ps.p * C ** ps.p * ps.xi_norm * norm_u ** (ps.p - 1))


def derivative_bound_check(ps: ProblemSpec, u, C: float, directions: int = 50,
                           seed: int = 0) -> dict:
    x = _vals(u)
    g = euclidean_gradient(ps, x)
    vs = random_unit_directions(ps, directions, seed)
    proxy = max(abs(float(g @ v)) for v in vs) if np.any(x) else 0.0
    nrm = e_norm(ps, x)
    bound = derivative_bound_bound(ps, nrm, C)
    return {"proxy": proxy, "bound": bound, "norm": nrm, "C": C,
            "pass": bool(proxy <= bound)}


class ProbeKind(str, enum.Enum):
    TRANSLATES = "translates"
    TAILS = "tails"


def _require_growing_v(ps: ProblemSpec):
    V = ps.V.values
    pts = ps.domain.points
    centre = np.array([(a + b) / 2 for a, b in zip(ps.domain.lo, ps.domain.hi)])
    r = np.linalg.norm(pts - centre, axis=1)
    inner = V[r <= np.quantile(r, 0.1)].mean()
    outer = V[r >= np.quantile(r, 0.9)].mean()
    if not outer > 1.5 * inner:
        raise PreconditionError("(V2) analogue fails: V does not grow toward the box edge")


def embedding_constant(ps: ProblemSpec, draws: int = 200, steps: int = 40, seed: int = 0) -> float:
    """Estimate of sup ||u||_{L^mu}/||u|| over the full sine basis of the grid."""
    ladder = sine_ladder(ps.domain, ps.domain.size - 1)
    mask = np.ones(ladder.size, dtype=bool)
    return sup_lmu_ratio(ps, ladder, mask, draws, steps, np.random.default_rng(seed))["value"]


def compactness_probe(ps: ProblemSpec, probe_kind="translates", solutions=(),
                      radius: float | None = None, seed: int = 0) -> dict:
    """(a) normalised far translates lose L^mu mass; (b) solution mass sits where V is small."""
    _require_growing_v(ps)
    kind = ProbeKind(probe_kind)
    L = (ps.domain.hi[0] - ps.domain.lo[0]) / 2
    centre = (ps.domain.hi[0] + ps.domain.lo[0]) / 2
    out = {"kind": kind.value, "C": embedding_constant(ps, seed=seed)}
    if kind is ProbeKind.TRANSLATES:
        radius = radius or L / 4
        rows = []
        for shift in (0.0, L / 4, -L / 4, L / 2, -L / 2):
            f = bump(0.0, radius)
            shifted = lambda *xs: f(xs[0] - centre - shift, *[x - centre for x in xs[1:]])
            u = ps.domain.sample(shifted)
            u = u / e_norm(ps, u)
            rows.append({"shift": shift, "lmu": lmu_norm(u, ps.mu)})
        central = rows[0]["lmu"]
        far = max(r["lmu"] for r in rows if abs(r["shift"]) == L / 2)
        out.update(rows=rows, decay_factor=central / far, decays=bool(central / far >= 2))
    else:
        level = float(np.quantile(ps.V.values, 0.9))
        outside = ps.V.values > level
        rows = []
        for sol in solutions:
            x = _vals(sol.u if hasattr(sol, "u") else sol)
            mass = np.asarray(ps.nfun.M(x))
            frac = float(mass[outside].sum() / mass.sum())
            rows.append({"tail_fraction": frac, "pass": bool(frac < 1e-3)})
        out.update(level=level, rows=rows, pass_=all(r["pass"] for r in rows))
        out["pass"] = out.pop("pass_")
    return out


def norm_bound_check(ps: ProblemSpec, u, C: float) -> dict:
    """||u||^{m0}/2^{m0-1} <= I_1(u) + 2||xi|| C^p ||u||^p (+1e-6)."""
    idx = ps.indices
    nrm = e_norm(ps, u)
    semi, weighted = e_norm_parts(ps, u)
    lhs = nrm ** idx.m0 / 2 ** (idx.m0 - 1)
    rhs = energy(ps, u).I + 2 * ps.xi_norm * C ** ps.p * nrm ** ps.p
    return {"norm": nrm, "lhs": lhs, "rhs": rhs, "required": bool(nrm >= 1),
            "both_parts_at_least_1": bool(semi >= 1 and weighted >= 1),
            "pass": bool(lhs <= rhs + 1e-6)}
