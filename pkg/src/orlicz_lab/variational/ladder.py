"""Nested subspaces Y_k = span(e_1..e_k) and Z_k = span(e_k..e_K) of sine modes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..grid import BoxDomain, GridFunction


@dataclass(frozen=True)
class SubspaceLadder:
    """Rows of ``basis`` are orthonormal in the discrete L^2 inner product."""

    domain: BoxDomain
    basis: np.ndarray
    k_max: int

    @property
    def size(self) -> int:
        return self.basis.shape[0]

    def mode(self, j: int) -> GridFunction:
        return GridFunction(self.domain, self.basis[j - 1])

    def combine(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs) @ self.basis

    def y_mask(self, k: int) -> np.ndarray:
        self._check(k)
        return np.arange(1, self.size + 1) <= k

    def z_mask(self, k: int) -> np.ndarray:
        self._check(k)
        return np.arange(1, self.size + 1) >= k

    def _check(self, k):
        if not 1 <= k <= self.size:
            raise DomainError(f"k must lie in [1, {self.size}]")

    def gram(self) -> np.ndarray:
        return self.basis @ (self.basis * self.domain.weights).T


def sine_ladder(domain: BoxDomain, size: int = 24, k_max: int | None = None) -> SubspaceLadder:
    """Products of Dirichlet sine modes, ordered by total frequency.

    Midpoint samples of sin(j pi (x - lo)/l) are exactly orthogonal for
    j < n, so normalising by sqrt(2/l) gives an orthonormal family.
    """
    n, d = domain.n, domain.d
    if size >= n ** d:
        raise DomainError("ladder larger than the grid")
    lo = np.array(domain.lo)
    span = np.array(domain.hi) - lo
    x = (domain.points - lo) / span
    freqs = [(j,) for j in range(1, n)] if d == 1 else sorted(
        ((a, b) for a in range(1, n) for b in range(1, n)), key=lambda t: (t[0] + t[1], t))
    rows = []
    for f in freqs[:size]:
        row = np.ones(domain.size)
        for axis, j in enumerate(f):
            row *= np.sqrt(2.0 / span[axis]) * np.sin(np.pi * j * x[:, axis])
        rows.append(row)
    return SubspaceLadder(domain, np.array(rows), k_max if k_max is not None else size)
