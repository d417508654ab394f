"""The model problem: data, energy I_lambda = G + Psi - lambda*B, and derivatives."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .. import _pairs
from ..errors import DomainError, InvalidSpecError, PreconditionError
from ..grid import BoxDomain, GridFunction, check_v1, gauge, lmu_norm, same_domain
from ..nfunc import IndexPair, NFunctionSpec, estimate_indices
from ..sobolev import FractionalParams

EPS_REG = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    nfun: NFunctionSpec
    fp: FractionalParams
    domain: BoxDomain
    V: GridFunction = field(compare=False)
    xi: GridFunction = field(compare=False)
    p: float
    mu: float
    lam: float = 1.0
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        same_domain(self.V, self.xi)
        if self.V.domain != self.domain:
            raise InvalidSpecError("V and xi must live on the problem domain")
        if self.domain.d != self.fp.d:
            raise InvalidSpecError("domain dimension differs from d")
        if not 1 <= self.lam <= 2:
            raise DomainError("lambda must lie in [1, 2]")
        if np.any(self.xi.values < 0):
            raise PreconditionError("(f1) fails: xi must be nonnegative")
        check_v1(self.V)
        if not 1 < self.p < self.mu:
            raise PreconditionError("need 1 < p < mu")

    @property
    def indices(self) -> IndexPair:
        return _indices(self.nfun, self.fp.d)

    def validate(self) -> dict:
        """Grid analogues of the structural hypotheses; raises on the first failure."""
        idx = self.indices
        if not idx.m1_basic:
            raise PreconditionError("(m1) fails: need 1 < m0 <= m^0 < inf")
        if not self.mu < idx.m0:
            raise PreconditionError("(M1) fails: need mu < m0")
        return {"m1_basic": True, "m1_full": idx.m1, "mu_below_m0": True,
                "V0": float(np.min(self.V.values)), "xi_norm": self.xi_norm}

    def with_lambda(self, lam: float) -> "ProblemSpec":
        return replace(self, lam=lam)

    def with_xi(self, xi: GridFunction) -> "ProblemSpec":
        return replace(self, xi=xi)

    @property
    def xi_exponent(self) -> float:
        return self.mu / (self.mu - self.p)

    @property
    def xi_norm(self) -> float:
        """||xi|| in L^{mu/(mu-p)}."""
        return lmu_norm(self.xi, self.xi_exponent)

    def to_dict(self) -> dict:
        return {"nfun": self.nfun.to_dict(), "s": self.fp.s, "d": self.fp.d,
                "domain": self.domain.to_dict(), "p": self.p, "mu": self.mu,
                "lambda": self.lam, **self.labels}


_INDEX_CACHE: dict = {}


def _indices(spec, d):
    key = (spec, d)
    if key not in _INDEX_CACHE:
        _INDEX_CACHE[key] = estimate_indices(spec, d)
    return _INDEX_CACHE[key]


def prototype(n: int = 64, half_width: float = 6.0, nfun: NFunctionSpec | None = None,
              lam: float = 1.0) -> ProblemSpec:
    """Power(3), p = 1.5, mu = 2, V = 1 + x^2, xi = exp(-x^2), d = 1, s = 0.5."""
    dom = BoxDomain.interval(-half_width, half_width, n)
    return ProblemSpec(
        nfun=nfun or NFunctionSpec.power(3), fp=FractionalParams(0.5, 1), domain=dom,
        V=dom.sample(lambda x: 1 + x ** 2), xi=dom.sample(lambda x: np.exp(-x ** 2)),
        p=1.5, mu=2.0, lam=lam, labels={"V": "1 + x^2", "xi": "exp(-x^2)"})


@dataclass
class EnergyBreakdown:
    G: float
    Psi: float
    B: float
    A: float
    I: float

    def to_dict(self) -> dict:
        return asdict(self)


def _vals(ps: ProblemSpec, u) -> np.ndarray:
    if isinstance(u, GridFunction):
        if u.domain != ps.domain:
            raise InvalidSpecError("u does not live on the problem domain")
        return u.values
    return np.asarray(u, dtype=float)


def energy(ps: ProblemSpec, u) -> EnergyBreakdown:
    x = _vals(ps, u)
    tab = _pairs.pair_table(ps.domain)
    w = ps.domain.cell_volume
    G = _pairs.modular_sum(tab, x, ps.nfun, ps.fp.s)
    Psi = w * float(np.sum(ps.V.values * ps.nfun.M(x)))
    B = w * float(np.sum(ps.xi.values * np.abs(x) ** ps.p))
    A = G + Psi
    return EnergyBreakdown(G=G, Psi=Psi, B=B, A=A, I=A - ps.lam * B)


def source(ps: ProblemSpec, x):
    """Regularised |u|^{p-2}u; exact up to eps^{p-1} near 0."""
    a = np.abs(x)
    return np.sign(x) * ((a + EPS_REG) ** (ps.p - 1) - EPS_REG ** (ps.p - 1))


def euclidean_gradient(ps: ProblemSpec, x) -> np.ndarray:
    """Gradient of I with respect to the sample vector."""
    tab = _pairs.pair_table(ps.domain)
    w = ps.domain.cell_volume
    g = _pairs.modular_gradient(tab, x, ps.nfun.m, ps.fp.s)
    g += w * ps.V.values * ps.nfun.m(x)
    g -= w * ps.lam * ps.p * ps.xi.values * source(ps, x)
    return g


def grad_energy(ps: ProblemSpec, u) -> GridFunction:
    """Riesz representative g in the discrete L^2 pairing: sum g v w = <I'(u), v>."""
    x = _vals(ps, u)
    return GridFunction(ps.domain, euclidean_gradient(ps, x) / ps.domain.cell_volume)


def hessian(ps: ProblemSpec, x) -> np.ndarray:
    tab = _pairs.pair_table(ps.domain)
    w = ps.domain.cell_volume
    H = _pairs.modular_hessian(tab, x, ps.nfun.dm, ps.fp.s)
    a = np.abs(x)
    diag = w * ps.V.values * ps.nfun.dm(x)
    diag -= w * ps.lam * ps.p * (ps.p - 1) * ps.xi.values * (a + EPS_REG) ** (ps.p - 2)
    H[np.diag_indices_from(H)] += diag
    return H


def residual(ps: ProblemSpec, u) -> float:
    """Discrete L^2 norm of the gradient representative."""
    g = grad_energy(ps, u)
    return math.sqrt(g.inner(g))


# ---------------------------------------------------------------------------
# the norm ||u|| = [u]_(s,M) + ||u||_(V,M) and its gradient


def _gauge_pair(ps: ProblemSpec, x):
    tab = _pairs.pair_table(ps.domain)
    w = ps.domain.cell_volume
    spread = float(np.ptp(x))
    semi = 0.0 if spread == 0 else gauge(
        lambda lam: _pairs.modular_sum(tab, x / lam, ps.nfun, ps.fp.s), spread)
    big = float(np.max(np.abs(x)))
    V = ps.V.values
    weighted = 0.0 if big == 0 else gauge(
        lambda lam: w * float(np.sum(V * ps.nfun.M(x / lam))), big)
    return semi, weighted


def e_norm_parts(ps: ProblemSpec, u) -> tuple[float, float]:
    """([u]_(s,M), ||u||_(V,M))."""
    return _gauge_pair(ps, _vals(ps, u))


def e_norm(ps: ProblemSpec, u) -> float:
    a, b = e_norm_parts(ps, u)
    return a + b


def e_norm_gradient(ps: ProblemSpec, x) -> tuple[float, np.ndarray]:
    """||u|| and its gradient, by implicit differentiation of both gauges.

    For a gauge lam(u) with rho(u/lam) = 1 the gradient is g/(g.z) where
    z = u/lam and g is the modular gradient at z.
    """
    semi, weighted = _gauge_pair(ps, x)
    tab = _pairs.pair_table(ps.domain)
    w = ps.domain.cell_volume
    grad = np.zeros_like(x)
    if semi > 0:
        z = x / semi
        g = _pairs.modular_gradient(tab, z, ps.nfun.m, ps.fp.s)
        grad += g / float(g @ z)
    if weighted > 0:
        z = x / weighted
        g = w * ps.V.values * ps.nfun.m(z)
        grad += g / float(g @ z)
    return semi + weighted, grad


def lmu_gradient(ps: ProblemSpec, x) -> tuple[float, np.ndarray]:
    w = ps.domain.cell_volume
    mu = ps.mu
    val = float(np.sum(np.abs(x) ** mu) * w) ** (1 / mu)
    if val == 0:
        return 0.0, np.zeros_like(x)
    return val, w * np.sign(x) * np.abs(x) ** (mu - 1) / val ** (mu - 1)

