"""Uniform box grids, midpoint quadrature and Orlicz-type norms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, InvalidSpecError, PreconditionError, ShapeError
from .nfunc import NFunctionSpec

GAUGE_RTOL = 1e-10
GAUGE_CHECK = 1e-8
BRACKET_SPAN = 2.0 ** 40


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box in dimension 1 or 2 with n cells per axis."""

    d: int
    lo: tuple
    hi: tuple
    n: int

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(self.lo))
        hi = tuple(float(x) for x in np.atleast_1d(self.hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if self.d not in (1, 2):
            raise InvalidSpecError("only d = 1 or 2 is supported")
        if len(lo) != self.d or len(hi) != self.d:
            raise InvalidSpecError("lo/hi must have length d")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidSpecError("need lo < hi componentwise")
        n = self.n
        if not (8 <= n <= 256 and n & (n - 1) == 0):
            raise InvalidSpecError("n must be a power of two in [8, 256]")

    @classmethod
    def interval(cls, lo, hi, n):
        return cls(1, (lo,), (hi,), n)

    @classmethod
    def square(cls, lo, hi, n):
        return cls(2, (lo, lo), (hi, hi), n)

    def refined(self, n: int) -> "BoxDomain":
        return BoxDomain(self.d, self.lo, self.hi, n)

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def h(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / self.n

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(np.array(self.hi) - np.array(self.lo)))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.array(self.hi) - np.array(self.lo)))

    @property
    def ball_volume(self) -> float:
        """Volume of the unit ball in R^d."""
        return math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1)

    @property
    def sphere_area(self) -> float:
        """Surface measure of the unit sphere in R^d."""
        return self.d * self.ball_volume

    @cached_property
    def axes(self) -> list:
        return [lo + (np.arange(self.n) + 0.5) * h for lo, h in zip(self.lo, self.h)]

    @cached_property
    def points(self) -> np.ndarray:
        """Cell centres, shape (N, d), C order with the first axis slowest."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.cell_volume)

    def contains(self, other: "BoxDomain") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def sample(self, f: Callable) -> "GridFunction":
        """GridFunction from f evaluated at cell centres (f receives one array per axis)."""
        cols = [self.points[:, k] for k in range(self.d)]
        vals = np.broadcast_to(np.asarray(f(*cols), dtype=float), (self.size,))
        return GridFunction(self, vals.copy())

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))

    def constant(self, c: float) -> "GridFunction":
        return GridFunction(self, np.full(self.size, float(c)))

    def to_dict(self) -> dict:
        return {"d": self.d, "lo": list(self.lo), "hi": list(self.hi), "n": self.n}


class GridFunction:
    """Samples of a function at the cell centres of a BoxDomain."""

    __slots__ = ("domain", "values")

    def __init__(self, domain: BoxDomain, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.shape != (domain.size,):
            raise ShapeError(f"expected {domain.size} values, got {values.size}")
        self.domain = domain
        self.values = values

    @property
    def weights(self) -> np.ndarray:
        return self.domain.weights

    def like(self, values) -> "GridFunction":
        return GridFunction(self.domain, values)

    def _other(self, other):
        if isinstance(other, GridFunction):
            same_domain(self, other)
            return other.values
        return other

    def __add__(self, other):
        return self.like(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.like(self.values - self._other(other))

    def __mul__(self, other):
        return self.like(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.like(self.values / c)

    def __neg__(self):
        return self.like(-self.values)

    def integrate(self) -> float:
        return float(np.dot(self.values, self.weights))

    def inner(self, other: "GridFunction") -> float:
        return float(np.dot(self.values * self._other(other), self.weights))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"GridFunction(n={self.domain.n}, d={self.domain.d}, max|u|={self.max_abs():.3g})"


def same_domain(*fs: GridFunction) -> BoxDomain:
    dom = fs[0].domain
    for f in fs[1:]:
        if f.domain != dom:
            raise ShapeError("grid functions live on different domains")
    return dom


def _finite(u: GridFunction):
    if not np.all(np.isfinite(u.values)):
        raise DomainError("grid function has non-finite values")


class ConjugateAdapter:
    """Presents the complementary function Mbar through the .M interface."""

    def __init__(self, spec: NFunctionSpec):
        self.spec = spec

    def M(self, t):
        return self.spec.M_bar(t)


def modular(u: GridFunction, M, V: GridFunction | None = None) -> float:
    """Sum of M(u) (optionally times V) against the quadrature weights."""
    vals = np.asarray(M.M(u.values))
    if V is not None:
        same_domain(u, V)
        vals = V.values * vals
    return float(np.dot(vals, u.weights))


def gauge(rho: Callable[[float], float], scale: float) -> float:
    """The lambda > 0 with rho(lambda) = 1 for a continuous decreasing rho.

    ``rho(lam)`` is the modular evaluated at u/lam; ``scale`` seeds the
    bracket.  Raises if the root fails the 1e-8 post-check.
    """
    def f(x):
        r = rho(math.exp(x))
        # an infinite modular (argument past a tabulated range) still brackets
        return min(math.log(r), 700.0) if r > 0 else -700.0
    lo = hi = math.log(scale)
    ln_span = math.log(BRACKET_SPAN)
    step = math.log(2.0)
    flo = fhi = f(lo)
    while flo < 0:
        lo -= step
        if lo < math.log(scale) - ln_span:
            raise DomainError("gauge bracket exhausted below")
        flo = f(lo)
    while fhi > 0:
        hi += step
        if hi > math.log(scale) + ln_span:
            raise DomainError("gauge bracket exhausted above")
        fhi = f(hi)
    if flo == 0:
        return math.exp(lo)
    if fhi == 0:
        return math.exp(hi)
    x = brentq(f, lo, hi, xtol=GAUGE_RTOL * 1e-3, rtol=4 * np.finfo(float).eps, maxiter=200)
    lam = math.exp(x)
    check = rho(lam)
    if not abs(check - 1) <= GAUGE_CHECK:
        raise DomainError(f"gauge post-check failed: modular = {check!r}")
    return lam


def luxemburg_norm(u: GridFunction, M, V: GridFunction | None = None) -> float:
    _finite(u)
    if u.is_zero():
        return 0.0
    return gauge(lambda lam: modular(u / lam, M, V), u.max_abs())


def check_v1(V: GridFunction) -> float:
    """Return V0 = min V, raising unless it is positive."""
    v0 = float(np.min(V.values))
    if not (v0 > 0 and np.all(np.isfinite(V.values))):
        raise PreconditionError("(V1) fails: V must be bounded below by a positive V0 on the grid")
    return v0


def weighted_luxemburg(u: GridFunction, M, V: GridFunction) -> float:
    same_domain(u, V)
    check_v1(V)
    return luxemburg_norm(u, M, V)


def orlicz_norm(u: GridFunction, M) -> float:
    """Amemiya form inf_k (1 + modular(k u))/k, minimised over log k."""
    _finite(u)
    if u.is_zero():
        return 0.0
    lux = luxemburg_norm(u, M)
    g = lambda y: (1.0 + modular(u * math.exp(y), M)) * math.exp(-y)
    c = -math.log(lux)
    res = minimize_scalar(g, bounds=(c - 1.0, c + 8.0), method="bounded",
                          options={"xatol": 1e-11})
    return float(min(res.fun, g(c)))


def lmu_norm(u: GridFunction, mu: float) -> float:
    if not mu >= 1:
        raise DomainError("mu must be >= 1")
    _finite(u)
    return float(np.dot(np.abs(u.values) ** mu, u.weights) ** (1.0 / mu))


def holder_check(u: GridFunction, v: GridFunction, M: NFunctionSpec) -> dict:
    same_domain(u, v)
    lhs = float(np.dot(np.abs(u.values * v.values), u.weights))
    rhs = orlicz_norm(u, M) * orlicz_norm(v, ConjugateAdapter(M))
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "pass": bool(lhs <= rhs + 1e-8)}
