"""N-functions M(t) = int_0^|t| m and their numerical calculus.

Every density family is odd, strictly increasing on (0, inf) and vanishes at
zero.  Scalar and array arguments are both accepted by the evaluation methods.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InvalidSpecError, RangeError, UnsupportedSpecError

DEFAULT_RANGE = (1e-6, 1e6)
SCAN_POINTS = 4096
BISECT_RTOL = 1e-12
INDEX_TOL = 1e-9
# geometric sub-decades used near tau = 0 in the Sobolev-conjugate integral
TAU_MIN = 1e-14
PER_DECADE = 16


class Family(str, enum.Enum):
    POWER = "power"
    POWER_SUM = "power_sum"
    LOG_WEIGHTED = "log_weighted"
    TABULATED = "tabulated"


def _as_array(t):
    return np.asarray(t, dtype=float)


def _unwrap(x, like):
    return float(x) if np.ndim(like) == 0 else x


def invert_increasing(f: Callable[[np.ndarray], np.ndarray], y, guess=None,
                      rtol: float = BISECT_RTOL) -> np.ndarray:
    """Solve f(t) = y for t > 0 by bisection in log t, elementwise.

    ``f`` must be strictly increasing on (0, inf) with f(0+) = 0 and
    f(inf) = inf.  Zero targets map to zero.
    """
    y = _as_array(y)
    flat = np.atleast_1d(y).astype(float).ravel()
    if np.any(flat < 0) or not np.all(np.isfinite(flat)):
        raise DomainError("inversion target must be finite and >= 0")
    out = np.zeros_like(flat)
    pos = flat > 0
    if not np.any(pos):
        return out.reshape(y.shape)
    target = flat[pos]
    lo = np.ones_like(target) if guess is None else np.atleast_1d(_as_array(guess)).ravel()[pos].copy()
    hi = lo.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(2100):
            low = f(lo) > target
            if not np.any(low):
                break
            lo[low] *= 0.5
            if np.any(lo == 0):
                raise RangeError("bracket underflow while inverting")
        for _ in range(2100):
            high = ~(f(hi) >= target)
            if not np.any(high):
                break
            hi[high] *= 2.0
            if not np.all(np.isfinite(hi)):
                raise RangeError("bracket overflow while inverting")
        a, b = np.log(lo), np.log(hi)
        for _ in range(400):
            if np.all(b - a <= rtol * 0.25):
                break
            c = 0.5 * (a + b)
            below = f(np.exp(c)) < target
            a = np.where(below, c, a)
            b = np.where(below, b, c)
    out[pos] = np.exp(0.5 * (a + b))
    return out.reshape(y.shape)


@dataclass(frozen=True)
class NFunctionSpec:
    """A density m together with the range used for numerical scans.

    ``params`` holds the exponents of the parametric families; tabulated
    densities store their knots in ``knots_t``/``knots_m`` and interpolate
    piecewise-linearly in log-log coordinates.  ``scale`` multiplies m (and so
    M), which is how the M(1) = 1 normalisation is realised.
    """

    family: Family
    params: tuple = ()
    eval_range: tuple = DEFAULT_RANGE
    scale: float = 1.0
    knots_t: tuple = ()
    knots_m: tuple = ()
    _tab: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        lo, hi = self.eval_range
        if not (0 < lo < hi < math.inf):
            raise InvalidSpecError(f"bad eval_range {self.eval_range}")
        if not self.scale > 0:
            raise InvalidSpecError("scale must be positive")
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.POWER:
            (q,) = self.params
            if not q > 1:
                raise InvalidSpecError("Power needs q > 1")
        elif fam is Family.POWER_SUM:
            p, q = self.params
            if not 1 < p <= q:
                raise InvalidSpecError("PowerSum needs 1 < p <= q")
        elif fam is Family.LOG_WEIGHTED:
            (q,) = self.params
            if not q > 1:
                raise InvalidSpecError("LogWeighted needs q > 1")
        else:
            object.__setattr__(self, "_tab", _build_table(self.knots_t, self.knots_m))

    # constructors -------------------------------------------------------
    @classmethod
    def power(cls, q, eval_range=DEFAULT_RANGE):
        return cls(Family.POWER, (float(q),), tuple(eval_range))

    @classmethod
    def power_sum(cls, p, q, eval_range=DEFAULT_RANGE):
        return cls(Family.POWER_SUM, (float(p), float(q)), tuple(eval_range))

    @classmethod
    def log_weighted(cls, q, eval_range=DEFAULT_RANGE):
        return cls(Family.LOG_WEIGHTED, (float(q),), tuple(eval_range))

    @classmethod
    def tabulated(cls, t: Sequence[float], m: Sequence[float], eval_range=None):
        t = tuple(float(x) for x in t)
        m = tuple(float(x) for x in m)
        if eval_range is None:
            eval_range = (t[0], t[-1])
        return cls(Family.TABULATED, (), tuple(eval_range), knots_t=t, knots_m=m)

    def scaled(self, c: float) -> "NFunctionSpec":
        return NFunctionSpec(self.family, self.params, self.eval_range, self.scale * c,
                             self.knots_t, self.knots_m)

    def with_range(self, lo: float, hi: float) -> "NFunctionSpec":
        return NFunctionSpec(self.family, self.params, (lo, hi), self.scale,
                             self.knots_t, self.knots_m)

    def label(self) -> str:
        if self.family is Family.TABULATED:
            return f"Tabulated({len(self.knots_t)} knots)"
        args = ",".join(f"{p:g}" for p in self.params)
        name = {Family.POWER: "Power", Family.POWER_SUM: "PowerSum",
                Family.LOG_WEIGHTED: "LogWeighted"}[self.family]
        tail = "" if self.scale == 1.0 else f"*{self.scale:.6g}"
        return f"{name}({args}){tail}"

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "eval_range": list(self.eval_range)}
        if self.family is Family.TABULATED:
            d["knots_t"] = list(self.knots_t)
            d["knots_m"] = list(self.knots_m)
        else:
            d["params"] = list(self.params)
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    # evaluation on t >= 0 --------------------------------------------------
    def _m_pos(self, a):
        fam = self.family
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam is Family.POWER:
                (q,) = self.params
                r = q * a ** (q - 1)
            elif fam is Family.POWER_SUM:
                p, q = self.params
                r = p * a ** (p - 1) + q * a ** (q - 1)
            elif fam is Family.LOG_WEIGHTED:
                (q,) = self.params
                r = q * a ** (q - 1) * np.log1p(a) + a ** q / (1 + a)
            else:
                r = _tab_m(self._tab, a)
        return self.scale * r

    def _M_pos(self, a):
        fam = self.family
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam is Family.POWER:
                (q,) = self.params
                r = a ** q
            elif fam is Family.POWER_SUM:
                p, q = self.params
                r = a ** p + a ** q
            elif fam is Family.LOG_WEIGHTED:
                (q,) = self.params
                r = a ** q * np.log1p(a)
            else:
                r = _tab_M(self._tab, a)
        return self.scale * r

    def _dm_pos(self, a):
        fam = self.family
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam is Family.POWER:
                (q,) = self.params
                r = q * (q - 1) * a ** (q - 2)
            elif fam is Family.POWER_SUM:
                p, q = self.params
                r = p * (p - 1) * a ** (p - 2) + q * (q - 1) * a ** (q - 2)
            elif fam is Family.LOG_WEIGHTED:
                (q,) = self.params
                r = (q * (q - 1) * a ** (q - 2) * np.log1p(a)
                     + 2 * q * a ** (q - 1) / (1 + a) - a ** q / (1 + a) ** 2)
            else:
                r = _tab_dm(self._tab, a)
        return self.scale * r

    def m(self, t):
        t = _as_array(t)
        a = np.abs(t)
        r = np.where(a > 0, self._m_pos(a), 0.0)
        return _unwrap(np.sign(t) * r, t)

    def dm(self, t):
        """Derivative m'(t); even in t."""
        t = _as_array(t)
        return _unwrap(self._dm_pos(np.abs(t)), t)

    def M(self, t):
        t = _as_array(t)
        a = np.abs(t)
        return _unwrap(np.where(a > 0, self._M_pos(a), 0.0), t)

    def M_inv(self, y):
        """Inverse of M on [0, inf)."""
        y = _as_array(y)
        if self.family is Family.POWER:
            (q,) = self.params
            if np.any(y < 0):
                raise DomainError("M_inv needs y >= 0")
            return _unwrap((y / self.scale) ** (1.0 / q), y)
        return _unwrap(invert_increasing(self._M_pos, y), y)

    def m_bar(self, y):
        """Right inverse of m: sup{s : m(s) <= y}."""
        y = _as_array(y)
        if np.any(y < 0):
            raise DomainError("conjugate density needs t >= 0")
        if self.family is Family.POWER:
            (q,) = self.params
            return _unwrap((y / (q * self.scale)) ** (1.0 / (q - 1)), y)
        return _unwrap(invert_increasing(self._m_pos, y), y)

    def M_bar(self, y):
        """Complementary function, via the Young equality t*mbar(t) - M(mbar(t))."""
        y = np.abs(_as_array(y))
        if self.family is Family.POWER:
            (q,) = self.params
            qc = q / (q - 1)
            return _unwrap((q - 1) * self.scale * (y / (q * self.scale)) ** qc, y)
        s = _as_array(self.m_bar(y))
        return _unwrap(y * s - self._M_pos_safe(s), y)

    def _M_pos_safe(self, a):
        return np.where(a > 0, self._M_pos(np.abs(a)), 0.0)

    def scan_grid(self, n: int = SCAN_POINTS) -> np.ndarray:
        lo, hi = self.eval_range
        return np.logspace(math.log10(lo), math.log10(hi), n)


# ---------------------------------------------------------------------------
# tabulated densities: log-log piecewise-linear m, exact piecewise integration

def _build_table(t, m):
    t = np.asarray(t, dtype=float)
    m = np.asarray(m, dtype=float)
    if t.ndim != 1 or t.shape != m.shape or t.size < 2:
        raise InvalidSpecError("tabulated density needs >= 2 matching knots")
    if not (np.all(t > 0) and np.all(m > 0)):
        raise InvalidSpecError("tabulated knots must be positive")
    if not (np.all(np.diff(t) > 0) and np.all(np.diff(m) > 0)):
        raise InvalidSpecError("tabulated density must be strictly increasing in t and m")
    lt, lm = np.log(t), np.log(m)
    slope = np.diff(lm) / np.diff(lt)
    # slopes[k] is used on [t_{k-1}, t_k]; extrapolate with the end slopes
    slopes = np.concatenate([[slope[0]], slope, [slope[-1]]])
    seg = m[:-1] * t[:-1] / (slope + 1) * ((t[1:] / t[:-1]) ** (slope + 1) - 1)
    base = m[0] * t[0] / (slope[0] + 1)
    cum = np.concatenate([[base], base + np.cumsum(seg)])
    return {"t": t, "m": m, "lt": lt, "lm": lm, "slopes": slopes, "cum": cum}


def _locate(tab, a):
    # index k of the knot to the left; -1 means below the first knot
    return np.searchsorted(tab["t"], a, side="right") - 1


def _tab_m(tab, a):
    a = np.asarray(a, dtype=float)
    k = _locate(tab, a)
    kk = np.clip(k, 0, len(tab["t"]) - 1)
    b = tab["slopes"][k + 1]
    with np.errstate(divide="ignore"):
        return tab["m"][kk] * np.exp(b * (np.log(a) - tab["lt"][kk]))


def _tab_dm(tab, a):
    a = np.asarray(a, dtype=float)
    k = _locate(tab, a)
    b = tab["slopes"][k + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return b * _tab_m(tab, a) / a


def _tab_M(tab, a):
    a = np.asarray(a, dtype=float)
    k = _locate(tab, a)
    kk = np.clip(k, 0, len(tab["t"]) - 1)
    b = tab["slopes"][k + 1]
    tk, mk = tab["t"][kk], tab["m"][kk]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        part = mk * tk / (b + 1) * ((a / tk) ** (b + 1) - 1)
        below = tab["cum"][0] * (a / tab["t"][0]) ** (tab["slopes"][0] + 1)
    return np.where(k < 0, below, tab["cum"][kk] + part)


# ---------------------------------------------------------------------------
# spec-level operations


def _check_finite(t):
    if not np.all(np.isfinite(_as_array(t))):
        raise DomainError("argument must be finite")


def eval_M(spec: NFunctionSpec, t):
    _check_finite(t)
    return spec.M(t)


def conjugate_density(spec: NFunctionSpec, t):
    _check_finite(t)
    return spec.m_bar(t)


def eval_conjugate(spec: NFunctionSpec, t):
    _check_finite(t)
    return spec.M_bar(t)


def young_gap(spec: NFunctionSpec, s, t):
    """M(s) + Mbar(t) - s*t, nonnegative by Young's inequality."""
    s, t = _as_array(s), _as_array(t)
    _check_finite(s)
    _check_finite(t)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("young_gap needs s, t >= 0")
    r = spec.M(s) + spec.M_bar(t) - s * t
    return _unwrap(r, r)


@dataclass
class IndexPair:
    m0: float
    m_sup: float
    d: int | None = None
    m0_star: float | None = None
    msup_star: float | None = None
    argmin_t: float = float("nan")
    argmax_t: float = float("nan")

    @property
    def m1_basic(self) -> bool:
        """1 < m0 <= m_sup < inf, the part of (m1) that does not involve d."""
        return 1 < self.m0 <= self.m_sup + 1e-12 and math.isfinite(self.m_sup)

    @property
    def m1(self) -> bool:
        if self.d is None or self.m0_star is None:
            return False
        return (self.m1_basic and self.m0 < self.d * (1 - INDEX_TOL)
                and self.m_sup < self.m0_star)

    def to_dict(self) -> dict:
        return {"m0": self.m0, "m_sup": self.m_sup, "d": self.d,
                "m0_star": self.m0_star, "msup_star": self.msup_star,
                "m1_basic": self.m1_basic, "m1": self.m1,
                "argmin_t": self.argmin_t, "argmax_t": self.argmax_t}


def _star(d, x):
    # an index within round-off of d is critical: the starred index is undefined
    if d is None or d < 2 or x >= d * (1 - INDEX_TOL):
        return None
    return d * x / (d - x)


def _refine(f, lt, i, sign):
    """Golden-section/Brent refinement of an extremum of f(exp(.)) near lt[i]."""
    a = lt[max(i - 1, 0)]
    b = lt[min(i + 1, len(lt) - 1)]
    if b <= a:
        return f(math.exp(lt[i])), math.exp(lt[i])
    res = minimize_scalar(lambda x: sign * f(math.exp(x)), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-10})
    best_val = sign * res.fun
    grid_val = f(math.exp(lt[i]))
    if sign * grid_val < sign * best_val:
        return grid_val, math.exp(lt[i])
    return best_val, math.exp(res.x)


def index_ratio(spec, t):
    t = _as_array(t)
    M = spec.M(t)
    if np.any(M <= 0):
        raise InvalidSpecError("M(t) = 0 for some t > 0")
    return t * spec.m(t) / M


def estimate_indices(spec: NFunctionSpec, d: int | None = None,
                     n: int = SCAN_POINTS) -> IndexPair:
    """inf and sup of t m(t)/M(t) over the scan range, with local refinement."""
    t = spec.scan_grid(n)
    r = index_ratio(spec, t)
    if not np.all(np.isfinite(r)):
        raise InvalidSpecError("index ratio is not finite on the scan range")
    lt = np.log(t)
    f = lambda x: float(index_ratio(spec, x))
    m0, tmin = _refine(f, lt, int(np.argmin(r)), 1.0)
    msup, tmax = _refine(f, lt, int(np.argmax(r)), -1.0)
    m0, msup = min(m0, float(r.min())), max(msup, float(r.max()))
    return IndexPair(m0=m0, m_sup=msup, d=d, m0_star=_star(d, m0),
                     msup_star=_star(d, msup), argmin_t=tmin, argmax_t=tmax)


def xi_bounds(idx: IndexPair, beta: float):
    """(min, max) of {beta^m0, beta^m_sup}."""
    if beta < 0 or not math.isfinite(beta):
        raise DomainError("beta must be finite and >= 0")
    a, b = beta ** idx.m0, beta ** idx.m_sup
    return (min(a, b), max(a, b))


def xi0(idx: IndexPair, beta):
    beta = np.asarray(beta, dtype=float)
    return np.minimum(beta ** idx.m0, beta ** idx.m_sup)


def xi1(idx: IndexPair, beta):
    beta = np.asarray(beta, dtype=float)
    return np.maximum(beta ** idx.m0, beta ** idx.m_sup)


# ---------------------------------------------------------------------------
# growth conditions


@dataclass
class GrowthReport:
    delta2: bool
    K: float
    M1: bool
    M2: bool
    M3: bool
    M3_near_zero: bool
    M3_at_infinity: bool
    mu: float
    d: int
    s: float
    evidence: dict

    @property
    def verdicts(self) -> dict:
        return {"delta2": self.delta2, "M1": self.M1, "M2": self.M2, "M3": self.M3}

    def to_dict(self) -> dict:
        return {"verdicts": self.verdicts, "K": self.K, "mu": self.mu, "d": self.d,
                "s": self.s, "M3_near_zero": self.M3_near_zero,
                "M3_at_infinity": self.M3_at_infinity, "evidence": self.evidence}


def _decades(lo, hi):
    a, b = math.floor(math.log10(lo) + 1e-9), math.ceil(math.log10(hi) - 1e-9)
    return 10.0 ** np.arange(a, b + 1)


def _delta2(spec, t):
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = spec.M(2 * t) / spec.M(t)
    K = float(np.max(ratio))
    top = t[-1]
    r_top = float(spec.M(2 * top) / spec.M(top))
    prev = top / 10
    r_prev = float(spec.M(2 * prev) / spec.M(prev))
    ok = math.isfinite(K) and r_top <= 1.05 * r_prev
    sample = np.linspace(0, len(t) - 1, 25).astype(int)
    ev = {"t": t[sample].tolist(), "ratio": ratio[sample].tolist(),
          "ratio_top": r_top, "ratio_prev_decade": r_prev}
    return ok, K, ev


def _M1(spec, mu, idx):
    lo, hi = spec.eval_range
    t = np.logspace(math.log10(hi) - 2, math.log10(hi), 21)
    with np.errstate(over="ignore"):
        vals = t ** mu / spec.M(t)
    at_one = float(1.0 / spec.M(1.0))
    decreasing = bool(np.all(np.diff(vals) < 0))
    ok = bool(decreasing and vals[-1] <= 1e-3 * at_one and 1 < mu < idx.m0)
    return ok, {"t": t.tolist(), "ratio": vals.tolist(), "ratio_at_1": at_one,
                "mu_below_m0": bool(1 < mu < idx.m0)}


def _M2(spec, n_pairs=4096, seed=0):
    lo, hi = spec.eval_range
    rng = np.random.default_rng(seed)
    x = np.exp(rng.uniform(2 * math.log(lo), 2 * math.log(hi), size=(n_pairs, 2)))
    a, b = x[:, 0], x[:, 1]
    f = lambda z: spec.M(np.sqrt(z))
    lhs = f(0.5 * (a + b))
    rhs = 0.5 * (f(a) + f(b))
    slack = rhs - lhs
    tol = 1e-12 * np.maximum(rhs, 1e-300)
    worst = int(np.argmin(slack / np.maximum(rhs, 1e-300)))
    ok = bool(np.all(slack >= -tol))
    return ok, {"pairs": n_pairs, "worst_a": float(a[worst]), "worst_b": float(b[worst]),
                "worst_rel_slack": float(slack[worst] / max(rhs[worst], 1e-300))}


def _decade_integrals(f, edges, nodes=16):
    """Integral of f over each [edges[k], edges[k+1]] by Gauss-Legendre in log tau."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    out = np.empty(len(edges) - 1)
    for k in range(len(edges) - 1):
        a, b = math.log(edges[k]), math.log(edges[k + 1])
        sub = np.linspace(a, b, PER_DECADE + 1)
        mid = 0.5 * (sub[1:] + sub[:-1])[:, None]
        half = 0.5 * (sub[1:] - sub[:-1])[:, None]
        y = mid + half * x[None, :]
        tau = np.exp(y)
        out[k] = float(np.sum(half * w[None, :] * f(tau) * tau))
    return out


def m3_integrand(spec: NFunctionSpec, d: int, s: float):
    a = (d + s) / d
    return lambda tau: spec.M_inv(tau) / tau ** a


def _M3(spec, d, s):
    f = m3_integrand(spec, d, s)
    low_edges = 10.0 ** np.arange(math.log10(TAU_MIN), 1)
    low = _decade_integrals(f, low_edges)
    top = max(float(spec.M(spec.eval_range[1])), 10.0)
    high_edges = 10.0 ** np.arange(0, math.ceil(math.log10(top)) + 1)
    high = _decade_integrals(f, high_edges)
    # toward 0: contributions must shrink geometrically; toward inf: must not
    r0 = low[:-1] / low[1:]
    rinf = high[1:] / high[:-1]
    near_zero = bool(np.all(r0[:4] <= 0.99))
    at_inf = bool(np.all(rinf[-3:] >= 0.99))
    ev = {"low_decades": low_edges[:-1].tolist(), "low_contrib": low.tolist(),
          "high_decades": high_edges[:-1].tolist(), "high_contrib": high.tolist(),
          "ratio_toward_zero": r0[:4].tolist(), "ratio_toward_inf": rinf[-3:].tolist()}
    return near_zero, at_inf, ev


def check_growth(spec: NFunctionSpec, mu: float, d: int, s_frac: float) -> GrowthReport:
    if not mu > 1:
        raise DomainError("mu must exceed 1")
    if not 0 < s_frac < 1:
        raise DomainError("s must lie in (0, 1)")
    if d < 1:
        raise DomainError("d must be positive")
    t = spec.scan_grid()
    idx = estimate_indices(spec, d)
    ok2, K, ev2 = _delta2(spec, t)
    ok_m1, ev_m1 = _M1(spec, mu, idx)
    ok_m2, ev_m2 = _M2(spec)
    nz, inf_, ev3 = _M3(spec, d, s_frac)
    return GrowthReport(delta2=ok2, K=K, M1=ok_m1, M2=ok_m2, M3=nz and inf_,
                        M3_near_zero=nz, M3_at_infinity=inf_, mu=mu, d=d, s=s_frac,
                        evidence={"delta2": ev2, "M1": ev_m1, "M2": ev_m2, "M3": ev3})


# ---------------------------------------------------------------------------
# Sobolev conjugate


class SobolevConjugate:
    """Tabulated Sobolev conjugate of M for dimension d and order s.

    The inverse Mstar^{-1}(tau) = int_0^tau M^{-1}(r) / r^{(d+s)/d} dr is
    integrated on geometric sub-decades from TAU_MIN upward; the piece below
    TAU_MIN is closed with the local power law.
    """

    def __init__(self, spec: NFunctionSpec, d: int, s: float, tau_max: float | None = None,
                 strict: bool = True):
        if not 0 < s <= 1:
            raise DomainError("s must lie in (0, 1]")
        self.spec, self.d, self.s = spec, d, s
        self.a = (d + s) / d
        nz, inf_, ev = _M3(spec, d, s)
        self.evidence = ev
        if strict and not (nz and inf_):
            raise UnsupportedSpecError("(M3) fails: Sobolev conjugate undefined")
        if tau_max is None:
            tau_max = max(float(spec.M(spec.eval_range[1])), 10.0)
        self.f = m3_integrand(spec, d, s)
        decades = math.ceil(math.log10(tau_max) - math.log10(TAU_MIN))
        self.tau = np.logspace(math.log10(TAU_MIN), math.log10(TAU_MIN) + decades,
                               decades * PER_DECADE + 1)
        f0, f1 = float(self.f(self.tau[0])), float(self.f(self.tau[1]))
        self.tail_slope = math.log(f1 / f0) / math.log(self.tau[1] / self.tau[0])
        if self.tail_slope <= -1:
            raise UnsupportedSpecError("integrand not integrable at 0 on the tabulated range")
        tail = f0 * self.tau[0] / (self.tail_slope + 1)
        pieces = self._segments(self.tau[:-1], self.tau[1:])
        self.inv_table = tail + np.concatenate([[0.0], np.cumsum(pieces)])

    def _segments(self, a, b, nodes=8):
        x, w = np.polynomial.legendre.leggauss(nodes)
        la, lb = np.log(a)[:, None], np.log(b)[:, None]
        mid, half = 0.5 * (la + lb), 0.5 * (lb - la)
        tau = np.exp(mid + half * x[None, :])
        return np.sum(half * w[None, :] * self.f(tau) * tau, axis=1)

    @property
    def t_range(self):
        return float(self.inv_table[0]), float(self.inv_table[-1])

    def inverse(self, tau):
        """Mstar^{-1}(tau)."""
        tau = _as_array(tau)
        flat = np.atleast_1d(tau).ravel()
        if np.any(flat < 0):
            raise DomainError("tau must be >= 0")
        out = np.zeros_like(flat)
        if np.any(flat > self.tau[-1] * (1 + 1e-12)):
            raise RangeError("tau beyond the tabulated range; extend eval_range")
        small = (flat > 0) & (flat < self.tau[0])
        out[small] = self.inv_table[0] * (flat[small] / self.tau[0]) ** (self.tail_slope + 1)
        mid = flat >= self.tau[0]
        if np.any(mid):
            x = flat[mid]
            k = np.clip(np.searchsorted(self.tau, x, side="right") - 1, 0, len(self.tau) - 2)
            part = self._segments(self.tau[k], np.maximum(x, self.tau[k]))
            out[mid] = self.inv_table[k] + part
        return _unwrap(out.reshape(tau.shape), tau)

    def value(self, t):
        """Mstar(t) by monotone inversion of the tabulated inverse."""
        t = _as_array(t)
        _check_finite(t)
        flat = np.abs(np.atleast_1d(t).ravel())
        out = np.zeros_like(flat)
        lo, hi = self.t_range
        if np.any(flat > hi * (1 + 1e-12)):
            raise RangeError("Mstar argument beyond the computed range; extend eval_range")
        small = (flat > 0) & (flat < lo)
        out[small] = self.tau[0] * (flat[small] / lo) ** (1.0 / (self.tail_slope + 1))
        mid = flat >= lo
        if np.any(mid):
            x = flat[mid]
            k = np.clip(np.searchsorted(self.inv_table, x, side="right") - 1, 0, len(self.tau) - 2)
            a, b = np.log(self.tau[k]), np.log(self.tau[k + 1])
            for _ in range(200):
                if np.all(b - a <= BISECT_RTOL * 0.25):
                    break
                c = 0.5 * (a + b)
                below = self.inverse(np.exp(c)) < x
                a = np.where(below, c, a)
                b = np.where(below, b, c)
            out[mid] = np.exp(0.5 * (a + b))
        return _unwrap(out.reshape(t.shape), t)

    def density_at_tau(self, tau):
        """m_*(t) at t = Mstar^{-1}(tau), from the inverse-function rule."""
        tau = _as_array(tau)
        return tau ** self.a / self.spec.M_inv(tau)

    def as_nfunction(self) -> NFunctionSpec:
        """Mstar as a tabulated N-function (knots t_k = Mstar^{-1}(tau_k))."""
        t = self.inv_table
        m = self.density_at_tau(self.tau)
        keep = np.concatenate([[True], (np.diff(t) > 0) & (np.diff(m) > 0)])
        return NFunctionSpec.tabulated(t[keep], m[keep], eval_range=(float(t[0]), float(t[-1])))


@lru_cache(maxsize=64)
def sobolev_table(spec: NFunctionSpec, d: int, s: float, strict: bool = True) -> SobolevConjugate:
    return SobolevConjugate(spec, d, s, strict=strict)


def sobolev_conjugate(spec: NFunctionSpec, d: int, s_frac: float, t):
    if np.any(_as_array(t) < 0):
        raise DomainError("t must be >= 0")
    return sobolev_table(spec, d, float(s_frac)).value(t)


def mstar_index_report(spec: NFunctionSpec, d: int, s_frac: float) -> dict:
    """Observed growth indices of Mstar next to the bounds d*m/(d-m).

    The bounds are recorded, not asserted.
    """
    idx = estimate_indices(spec, d)
    rep = {"spec": spec.label(), "d": d, "s": s_frac,
           "predicted_lower": idx.m0_star, "predicted_upper": idx.msup_star}
    try:
        # near-critical s converges too slowly for the decade test; tabulate anyway
        tab = sobolev_table(spec, d, float(s_frac), strict=False)
        mstar = tab.as_nfunction()
        lo, hi = mstar.eval_range
        obs = estimate_indices(mstar.with_range(lo * 1.001, hi / 1.001), d)
    except (UnsupportedSpecError, RangeError, InvalidSpecError) as exc:
        rep.update(observed_lower=None, observed_upper=None, status="unsupported",
                   note=str(exc), agree=None)
        return rep
    rep["observed_lower"], rep["observed_upper"] = obs.m0, obs.m_sup
    rep["t_range"] = [lo, hi]
    unstable = obs.m_sup > 100 or math.log10(hi / lo) < 1
    rep["status"] = "unstable" if unstable else "ok"
    rep["note"] = ("index blows up as s approaches d/m (table spans "
                   f"{math.log10(hi / lo):.2g} decades)") if unstable else ""
    if idx.m0_star is None or idx.msup_star is None:
        rep["agree"] = None
    else:
        rep["agree"] = bool(obs.m0 >= idx.m0_star * (1 - 1e-2)
                            and obs.m_sup <= idx.msup_star * (1 + 1e-2))
    return rep


def kepsilon_constant(spec: NFunctionSpec, d: int, s_frac: float, eps: float,
                      t_range=None, n: int = SCAN_POINTS) -> float:
    """Smallest K >= 0 with Mstar(t)^{(d-s)/d} <= eps*Mstar(t) + K t on the scan grid."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    tab = sobolev_table(spec, d, float(s_frac))
    lo, hi = t_range if t_range is not None else tab.t_range
    e = (d - s_frac) / d
    t = np.logspace(math.log10(lo), math.log10(hi), n)

    def phi(x):
        v = tab.value(x)
        return (v ** e - eps * v) / x

    vals = phi(t)
    i = int(np.argmax(vals))
    if i in (0, n - 1) and vals[i] > 0:
        inward = t[i] * (10.0 if i == 0 else 0.1)
        if vals[i] > 1.05 * phi(np.array([inward]))[0]:
            raise UnsupportedSpecError("K_eps supremum still growing at the edge of the grid")
    best, _ = _refine(lambda x: float(phi(np.array([x]))[0]), np.log(t), i, -1.0)
    return max(0.0, best, float(vals.max()))


# ---------------------------------------------------------------------------
# domination


class Composed:
    """The N-function outer(inner(t)), used for Psi o Phi."""

    def __init__(self, outer: NFunctionSpec, inner: NFunctionSpec):
        self.outer, self.inner = outer, inner
        self.eval_range = inner.eval_range

    def M(self, t):
        return self.outer.M(self.inner.M(t))

    def label(self):
        return f"{self.outer.label()}o{self.inner.label()}"


def _ratio_table(b, a, k, decades=3, points=31):
    lo, hi = a.eval_range
    t = np.logspace(math.log10(hi) - decades, math.log10(hi), points)
    with np.errstate(over="ignore", invalid="ignore"):
        return t, b.M(k * t) / a.M(t)


def essentially_stronger(b, a, ks=(1.0, 2.0, 10.0)) -> dict:
    """Finite-evidence test of B << A (B(kt)/A(t) -> 0 for every k > 0).

    For each k the ratio on the top three decades of A's scan range must be
    decreasing and either fall by 1e-3 overall or shrink by at least 5% across
    every decade.  The second clause admits logarithmic decay such as
    1/log t, which no finite range can push down by three orders.
    """
    ks = list(ks)
    if not ks or any(k <= 0 for k in ks):
        raise DomainError("ks must be a nonempty list of positive numbers")
    tables = []
    verdict = True
    for k in ks:
        t, r = _ratio_table(b, a, k)
        finite = bool(np.all(np.isfinite(r))) and bool(np.all(r > 0))
        decreasing = finite and bool(np.all(np.diff(r) < 0))
        if finite:
            drop = float(r[-1] / r[0])
            per_decade = (r[10::10] / r[:-10:10]).tolist()
        else:
            drop, per_decade = float("nan"), []
        ok = decreasing and (drop < 1e-3 or max(per_decade) <= 0.95)
        verdict &= ok
        tables.append({"k": k, "t": t.tolist(), "ratio": r.tolist(), "drop": drop,
                       "decade_drops": per_decade, "decreasing": decreasing, "pass": ok})
    return {"verdict": bool(verdict), "tables": tables}


def composition_dominance(phi: NFunctionSpec, psi: NFunctionSpec, m: NFunctionSpec,
                          ks=(1.0, 2.0, 10.0)) -> dict:
    """Check the index hypotheses for Phi, Psi and then Psi o Phi << M."""
    ip, iq, im = estimate_indices(phi), estimate_indices(psi), estimate_indices(m)
    pre = {
        "phi_indices": [ip.m0, ip.m_sup], "psi_indices": [iq.m0, iq.m_sup],
        "m_indices": [im.m0, im.m_sup],
        "phi_between_1_and_m0": bool(1 < ip.m0 <= ip.m_sup < im.m0),
        "psi_sup_below_m0_over_phisup": bool(1 < iq.m0 and iq.m_sup < im.m0 / ip.m_sup),
    }
    if not (pre["phi_between_1_and_m0"] and pre["psi_sup_below_m0_over_phisup"]):
        return {"preconditions": pre, "preconditions_hold": False, "verdict": None}
    res = essentially_stronger(Composed(psi, phi), m, ks)
    return {"preconditions": pre, "preconditions_hold": True, "verdict": res["verdict"],
            "tables": res["tables"]}


def spec_from_dict(d: dict) -> NFunctionSpec:
    fam = Family(d["family"])
    rng = tuple(d.get("eval_range", DEFAULT_RANGE))
    if fam is Family.TABULATED:
        spec = NFunctionSpec.tabulated(d["knots_t"], d["knots_m"], eval_range=rng)
    else:
        spec = NFunctionSpec(fam, tuple(float(x) for x in d["params"]), rng)
    if "scale" in d:
        spec = spec.scaled(float(d["scale"]))
    return spec
