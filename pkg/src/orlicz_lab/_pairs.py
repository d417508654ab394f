"""Sums over unordered pairs of distinct grid points.

Each pair i < j is stored once; sums over ordered pairs are twice the
unordered ones for symmetric integrands.  Weights are uniform on a box grid,
so w(x)w(y) is a single constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import BoxDomain


@dataclass(frozen=True)
class PairTable:
    i: np.ndarray
    j: np.ndarray
    r: np.ndarray
    ww: float
    size: int
    d: int

    def diff(self, u):
        return u[self.i] - u[self.j]

    def scatter(self, c):
        """Vector g with g[k] = sum of c over pairs (k, .) minus pairs (., k)."""
        return (np.bincount(self.i, weights=c, minlength=self.size)
                - np.bincount(self.j, weights=c, minlength=self.size))


@lru_cache(maxsize=16)
def pair_table(domain: BoxDomain) -> PairTable:
    pts = domain.points
    i, j = np.triu_indices(domain.size, k=1)
    r = np.linalg.norm(pts[i] - pts[j], axis=1)
    i = i.astype(np.int32)
    j = j.astype(np.int32)
    return PairTable(i, j, r, domain.cell_volume ** 2, domain.size, domain.d)


def quotient(tab: PairTable, u, s):
    return tab.diff(u) / tab.r ** s


def modular_sum(tab: PairTable, u, M, s) -> float:
    """Ordered-pair sum of M(h_u) w w / r^d."""
    h = quotient(tab, u, s)
    return 2.0 * tab.ww * float(np.sum(np.asarray(M.M(h)) / tab.r ** tab.d))


def modular_gradient(tab: PairTable, u, m, s):
    """Euclidean gradient of modular_sum with respect to the sample values."""
    h = quotient(tab, u, s)
    c = 2.0 * tab.ww * np.asarray(m(h)) / tab.r ** (tab.d + s)
    return tab.scatter(c)


def modular_hessian(tab: PairTable, u, dm, s):
    h = quotient(tab, u, s)
    c = 2.0 * tab.ww * np.asarray(dm(h)) / tab.r ** (tab.d + 2 * s)
    H = np.zeros((tab.size, tab.size))
    np.add.at(H, (tab.i, tab.j), -c)
    H = H + H.T
    H[np.diag_indices(tab.size)] = -H.sum(axis=1)
    return H


def ws1_sum(tab: PairTable, u, s_prime) -> float:
    return 2.0 * tab.ww * float(np.sum(np.abs(tab.diff(u)) / tab.r ** (tab.d + s_prime)))


def pairing_sum(tab: PairTable, u, v, m, s) -> float:
    """Half the ordered-pair sum of m(h_u) h_v w w / r^d."""
    hu = quotient(tab, u, s)
    hv = quotient(tab, v, s)
    return tab.ww * float(np.sum(np.asarray(m(hu)) * hv / tab.r ** tab.d))
