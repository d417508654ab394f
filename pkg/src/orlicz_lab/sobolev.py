"""Fractional Orlicz-Sobolev modulars, seminorms and embedding estimates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from . import _pairs
from .errors import DomainError, InvalidSpecError, PreconditionError, RangeError, ShapeError
from .grid import (BoxDomain, GridFunction, gauge, luxemburg_norm, modular,
                   weighted_luxemburg)
from .nfunc import NFunctionSpec, sobolev_table


@dataclass(frozen=True)
class FractionalParams:
    s: float
    d: int
    s_prime: float | None = None

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise DomainError("s must lie in (0, 1)")
        if self.s_prime is not None and not 0 < self.s_prime < self.s:
            raise DomainError("need 0 < s' < s")


@dataclass
class SeminormBundle:
    rho: float
    rho_bar: float
    rho_tilde: float
    lux: float
    semi: float
    snorm: float
    tilde_norm: float
    weighted: float | None = None
    e_norm: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _check_dim(u: GridFunction, fp: FractionalParams):
    if u.domain.d != fp.d:
        raise ShapeError(f"grid dimension {u.domain.d} differs from d = {fp.d}")


def gagliardo_modular(u: GridFunction, M, fp: FractionalParams) -> float:
    _check_dim(u, fp)
    return _pairs.modular_sum(_pairs.pair_table(u.domain), u.values, M, fp.s)


def gagliardo_seminorm(u: GridFunction, M, fp: FractionalParams) -> float:
    _check_dim(u, fp)
    tab = _pairs.pair_table(u.domain)
    spread = float(np.ptp(u.values))
    if spread == 0:
        return 0.0
    return gauge(lambda lam: _pairs.modular_sum(tab, u.values / lam, M, fp.s), spread)


def tilde_modular(u: GridFunction, M, fp: FractionalParams) -> float:
    return modular(u, M) + gagliardo_modular(u, M, fp)


def norm_bundle(u: GridFunction, M, fp: FractionalParams,
                V: GridFunction | None = None) -> SeminormBundle:
    _check_dim(u, fp)
    tab = _pairs.pair_table(u.domain)
    rho = modular(u, M)
    rho_bar = _pairs.modular_sum(tab, u.values, M, fp.s)
    lux = luxemburg_norm(u, M)
    semi = gagliardo_seminorm(u, M, fp)
    if u.is_zero():
        tilde = 0.0
    else:
        tilde = gauge(lambda lam: modular(u / lam, M)
                      + _pairs.modular_sum(tab, u.values / lam, M, fp.s), u.max_abs())
    b = SeminormBundle(rho=rho, rho_bar=rho_bar, rho_tilde=rho + rho_bar, lux=lux,
                       semi=semi, snorm=lux + semi, tilde_norm=tilde)
    if V is not None:
        b.weighted = weighted_luxemburg(u, M, V)
        b.e_norm = semi + b.weighted
    return b


def lipschitz_spot_check(values, f: Callable, K: float, pairs: int = 20000, seed: int = 0) -> float:
    """Largest |f(a)-f(b)| - K|a-b| over sampled value pairs (<= ~0 when Lipschitz)."""
    rng = np.random.default_rng(seed)
    vals = np.asarray(values, dtype=float)
    a = rng.choice(vals, pairs)
    b = rng.choice(vals, pairs)
    b = np.where(a == b, b + rng.standard_normal(pairs) * (1e-3 + np.abs(b)), b)
    excess = np.abs(f(a) - f(b)) - K * np.abs(a - b)
    return float(np.max(excess - 1e-12 * np.abs(a - b)))


def compose_lipschitz(u: GridFunction, f: Callable, K: float, M, fp: FractionalParams) -> dict:
    """Bundle of f(u) and the contraction rho_bar(f(u)/K) <= rho_bar(u)."""
    if not K > 0:
        raise DomainError("K must be positive")
    if abs(float(f(np.array([0.0]))[0])) > 0:
        raise PreconditionError("Lipschitz composition needs f(0) = 0")
    if lipschitz_spot_check(u.values, f, K) > 1e-12:
        raise PreconditionError(f"f is not {K}-Lipschitz on the values of u")
    fu = u.like(f(u.values))
    lhs = gagliardo_modular(fu / K, M, fp)
    rhs = gagliardo_modular(u, M, fp)
    return {"bundle": norm_bundle(fu, M, fp), "composed": fu,
            "contracted_modular": lhs, "modular": rhs, "pass": bool(lhs <= rhs + 1e-10)}


def truncate(level: float) -> Callable:
    """t -> sgn(t) min(|t|, level)."""
    return lambda t: np.clip(t, -level, level)


def normalized(M: NFunctionSpec) -> tuple[NFunctionSpec, float]:
    """Rescale M so that M(1) = 1; returns the spec and the factor used."""
    m1 = float(M.M(1.0))
    if not (m1 > 0 and math.isfinite(m1)):
        raise InvalidSpecError("cannot normalise M(1) = 1 for this spec")
    c = 1.0 / m1
    return M.scaled(c), c


def w_s1_comparison(u: GridFunction, M: NFunctionSpec, fp: FractionalParams) -> dict:
    """Compare [u]_{s',1} with the bound (meas*omega/(s-s') + 1) delta^{s-s'} [u]_{s,M}."""
    if fp.s_prime is None:
        raise DomainError("w_s1_comparison needs s_prime")
    _check_dim(u, fp)
    Mn, factor = normalized(M)
    dom = u.domain
    gap = fp.s - fp.s_prime
    tab = _pairs.pair_table(dom)
    lhs = _pairs.ws1_sum(tab, u.values, fp.s_prime)
    semi = gagliardo_seminorm(u, Mn, fp)
    const = (dom.volume * dom.sphere_area / gap + 1.0) * dom.diameter ** gap
    rhs = const * semi
    return {"lhs": lhs, "rhs": rhs, "seminorm": semi, "constant": const,
            "normalisation_factor": factor, "omega": dom.sphere_area,
            "omega_kind": "unit-sphere area", "delta": dom.diameter,
            "meas": dom.volume, "slack": rhs - lhs,
            "pass": bool(lhs <= rhs * (1 + 1e-6))}


class MstarFunction:
    """Sobolev conjugate as an .M object; +inf beyond the tabulated range."""

    def __init__(self, M: NFunctionSpec, d: int, s: float):
        self.table = sobolev_table(M, d, float(s))
        self.t_max = self.table.t_range[1]

    def M(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        out = np.full(a.shape, np.inf)
        ok = a <= self.t_max
        if np.any(ok):
            out[ok] = self.table.value(a[ok])
        return out


def embedding_ratio(u: GridFunction, M: NFunctionSpec, fp: FractionalParams,
                    mstar: MstarFunction | None = None, return_parts: bool = False):
    """||u||_(M*) / ||u||_(s,M)."""
    _check_dim(u, fp)
    if u.is_zero():
        raise DomainError("embedding ratio is undefined for u = 0")
    if mstar is None:
        mstar = MstarFunction(M, fp.d, fp.s)
    k = luxemburg_norm(u, mstar)
    recheck = modular(u / k, mstar)
    if abs(recheck - 1) > 1e-8:
        raise RangeError(f"M* normalisation check failed: {recheck}")
    snorm = luxemburg_norm(u, M) + gagliardo_seminorm(u, M, fp)
    ratio = k / snorm
    if return_parts:
        return ratio, {"mstar_norm": k, "snorm": snorm, "normalisation": recheck}
    return ratio


def random_smooth(domain: BoxDomain, rng: np.random.Generator, modes: int = 6,
                  amplitude: float | None = None) -> GridFunction:
    """Random trigonometric polynomial with decaying coefficients."""
    lo = np.array(domain.lo)
    span = np.array(domain.hi) - lo
    x = (domain.points - lo) / span
    vals = np.full(domain.size, rng.normal())
    for k in range(1, modes + 1):
        for axis in range(domain.d):
            a, b = rng.normal(size=2) / k
            vals += a * np.cos(math.pi * k * x[:, axis]) + b * np.sin(math.pi * k * x[:, axis])
    if amplitude is None:
        amplitude = 10.0 ** rng.uniform(-1, 1)
    return GridFunction(domain, amplitude * vals / np.max(np.abs(vals)))


def empirical_c5(M: NFunctionSpec, fp: FractionalParams, domain: BoxDomain,
                 count: int = 200, seed: int = 0) -> dict:
    """Largest embedding ratio over a batch of random smooth functions."""
    rng = np.random.default_rng(seed)
    mstar = MstarFunction(M, fp.d, fp.s)
    ratios = [embedding_ratio(random_smooth(domain, rng), M, fp, mstar) for _ in range(count)]
    return {"n": domain.n, "count": count, "C5": float(max(ratios)),
            "median": float(np.median(ratios))}


def bump(center: float = 0.0, radius: float = 0.5) -> Callable:
    """Smooth compactly supported bump, vanishing outside |x - center| < radius."""
    def f(*xs):
        r2 = sum((x - center) ** 2 for x in xs) / radius ** 2
        out = np.zeros_like(r2)
        inside = r2 < 1
        out[inside] = np.exp(1 - 1 / (1 - r2[inside]))
        return out
    return f


def wholespace_embedding_probe(M: NFunctionSpec, fp: FractionalParams,
                               half_widths: Sequence[float] = (1.0, 2.0, 4.0),
                               cells_per_unit: int = 32, radius: float = 0.25) -> dict:
    """Embedding ratio of a fixed central bump on growing boxes at fixed spacing."""
    f = bump(0.0, radius)
    mstar = MstarFunction(M, fp.d, fp.s)
    rows = []
    for L in half_widths:
        n = int(round(2 * L * cells_per_unit))
        dom = BoxDomain(fp.d, (-L,) * fp.d, (L,) * fp.d, n)
        u = dom.sample(f)
        ratio, parts = embedding_ratio(u, M, fp, mstar, return_parts=True)
        rows.append({"half_width": L, "n": n, "ratio": ratio,
                     "lux": luxemburg_norm(u, M), "seminorm": gagliardo_seminorm(u, M, fp),
                     **parts})
    ratios = np.array([r["ratio"] for r in rows])
    spread = float(ratios.max() / ratios.min())
    lux = np.array([r["lux"] for r in rows])
    return {"rows": rows, "ratio_spread": spread, "bounded_within_factor_2": bool(spread <= 2),
            "lux_spread": float(lux.max() / lux.min())}
