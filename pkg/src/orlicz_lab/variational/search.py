"""Deflated Newton search for several critical pairs of the even energy I_1."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import PreconditionError
from ..grid import GridFunction, lmu_norm
from .ladder import SubspaceLadder, sine_ladder
from .problem import EnergyBreakdown, ProblemSpec, energy, euclidean_gradient, hessian

RESIDUAL_TOL = 1e-6
MIN_SEPARATION = 1e-3
BETA = 1.0


@dataclass
class CriticalPoint:
    u: GridFunction
    energy: EnergyBreakdown
    residual: float
    deflation_distance: float
    seed: int
    iterations: int
    tolerance: float = RESIDUAL_TOL
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"energy": self.energy.to_dict(), "residual": self.residual,
                "tolerance": self.tolerance, "deflation_distance": self.deflation_distance,
                "seed": self.seed, "iterations": self.iterations, **self.meta}


def _lmu_dist(ps, x, z):
    w = ps.domain.cell_volume
    return float(np.sum(np.abs(x - z) ** ps.mu) * w) ** (1 / ps.mu)


class Deflation:
    """eta(u) = prod over known states z of (1 + beta/||u - z||_{L^mu}).

    The known states are 0 and each accepted solution with its negative.
    """

    def __init__(self, ps: ProblemSpec, beta: float = BETA):
        self.ps, self.beta = ps, beta
        self.states = [np.zeros(ps.domain.size)]

    def add(self, x):
        self.states += [x.copy(), -x]

    def log_eta_and_grad(self, x):
        ps, w, mu = self.ps, self.ps.domain.cell_volume, self.ps.mu
        total, grad = 0.0, np.zeros_like(x)
        for z in self.states:
            e = x - z
            d = float(np.sum(np.abs(e) ** mu) * w) ** (1 / mu)
            if d == 0:
                return math.inf, grad
            eta = 1 + self.beta / d
            total += math.log(eta)
            dd = w * np.sign(e) * np.abs(e) ** (mu - 1) / d ** (mu - 1)
            grad += (-self.beta / d ** 2) * dd / eta
        return total, grad

    def distance(self, x) -> float:
        """Smallest L^mu distance to a known nontrivial state (inf if none)."""
        ds = [_lmu_dist(self.ps, x, z) for z in self.states[1:]]
        return min(ds) if ds else math.inf


def _residual(ps, g_euclid):
    w = ps.domain.cell_volume
    return float(np.linalg.norm(g_euclid) / math.sqrt(w))


def deflated_newton(ps: ProblemSpec, x0, deflation: Deflation, tol: float = RESIDUAL_TOL,
                    max_iter: int = 80):
    """Newton's method on eta(u) * grad I(u) with backtracking on its norm."""
    x = np.array(x0, dtype=float)
    g = euclidean_gradient(ps, x)
    log_eta, dlog = deflation.log_eta_and_grad(x)
    merit = log_eta + math.log(np.linalg.norm(g) + 1e-300)
    for it in range(max_iter):
        res = _residual(ps, g)
        if res <= tol:
            return x, res, it, True
        H = hessian(ps, x)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        denom = 1.0 - float(dlog @ step)
        if abs(denom) > 1e-12:
            step = step / denom
        alpha = 1.0
        while alpha > 1e-6:
            trial = x + alpha * step
            gt = euclidean_gradient(ps, trial)
            le, dl = deflation.log_eta_and_grad(trial)
            mt = le + math.log(np.linalg.norm(gt) + 1e-300)
            if math.isfinite(mt) and mt < merit + math.log(1 - 1e-4 * alpha):
                break
            alpha *= 0.5
        else:
            return x, res, it, False
        x, g, dlog, merit = trial, gt, dl, mt
    return x, _residual(ps, g), max_iter, _residual(ps, g) <= tol


def ray_scale(ps: ProblemSpec, x) -> float:
    """Minimiser of t -> I(t x) over t > 0."""
    f = lambda y: energy(ps, math.exp(y) * x).I
    res = minimize_scalar(f, bounds=(-12.0, 6.0), method="bounded", options={"xatol": 1e-8})
    return math.exp(res.x)


def find_critical_points(ps: ProblemSpec, count_target: int = 3, seeds: int = 40,
                         seed: int = 0, ladder: SubspaceLadder | None = None,
                         beta: float = BETA, tol: float = RESIDUAL_TOL) -> dict:
    """Collect up to count_target distinct nontrivial +- pairs.

    Seeds are random combinations of the first k ladder modes with k
    cycling upward, rescaled to the energy minimiser along their ray.
    """
    if ps.lam != 1.0:
        raise PreconditionError("the multiplicity search runs at lambda = 1")
    checks = ps.validate()
    ladder = ladder or sine_ladder(ps.domain, 12)
    rng = np.random.default_rng(seed)
    defl = Deflation(ps, beta)
    found: list[CriticalPoint] = []
    attempts = []
    if not np.any(ps.xi.values > 0):
        return {"solutions": [], "attempts": attempts, "checks": checks,
                "note": "xi vanishes: B = 0 and only u = 0 is critical"}
    for i in range(seeds):
        k = 1 + i % ladder.size
        coeffs = np.zeros(ladder.size)
        coeffs[:k] = rng.standard_normal(k) / np.arange(1, k + 1)
        x0 = ladder.combine(coeffs)
        x0 *= ray_scale(ps, x0)
        x, res, iters, ok = deflated_newton(ps, x0, defl, tol)
        dist = defl.distance(x)
        size = lmu_norm(GridFunction(ps.domain, x), ps.mu)
        accepted = bool(ok and size > MIN_SEPARATION and dist >= MIN_SEPARATION)
        attempts.append({"seed": i, "k": k, "converged": ok, "residual": res,
                         "iterations": iters, "lmu": size, "distance": dist,
                         "accepted": accepted})
        if accepted:
            u = GridFunction(ps.domain, x)
            found.append(CriticalPoint(u=u, energy=energy(ps, x), residual=res,
                                       deflation_distance=dist, seed=i, iterations=iters,
                                       tolerance=tol, meta={"k": k}))
            defl.add(x)
            if len(found) >= count_target:
                break
    found.sort(key=lambda c: c.energy.I)
    energies = [c.energy.I for c in found]
    return {"solutions": found, "attempts": attempts, "checks": checks,
            "energies": energies,
            "all_negative": bool(all(e < 0 for e in energies)),
            "sorted_nondecreasing": bool(all(a <= b for a, b in zip(energies, energies[1:])))}
