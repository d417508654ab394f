"""Pointwise fractional M-Laplacian and its weak form on a box grid."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _pairs
from .errors import PreconditionError, ShapeError
from .grid import BoxDomain, GridFunction, same_domain
from .sobolev import FractionalParams

SUPPORT_MARGIN = 0.25
SUPPORT_FLOOR = 1e-10


@dataclass(frozen=True)
class KernelQuadrature:
    """The box standing in for R^d.

    The principal value is realised by grouping the terms at y = x + o and
    its mirror x - o; when the mirror leaves the box the one-sided term stays.
    """

    outer_box: BoxDomain
    pv_policy: str = "symmetric_pairs"
    margin: float = SUPPORT_MARGIN

    def __post_init__(self):
        if self.pv_policy != "symmetric_pairs":
            raise ValueError(f"unknown pv_policy {self.pv_policy!r}")

    def check_support(self, u: GridFunction, name: str = "u"):
        """Raise unless u is negligible within margin*diameter of the box edge."""
        if u.domain != self.outer_box:
            raise ShapeError(f"{name} does not live on the quadrature box")
        scale = u.max_abs()
        if scale == 0:
            return
        dom = self.outer_box
        gap = self.margin * dom.diameter
        pts = dom.points
        near_edge = np.zeros(dom.size, dtype=bool)
        for k in range(dom.d):
            near_edge |= (pts[:, k] - dom.lo[k] < gap) | (dom.hi[k] - pts[:, k] < gap)
        if np.any(np.abs(u.values[near_edge]) > SUPPORT_FLOOR * scale):
            raise PreconditionError(
                f"support of {name} reaches within {self.margin:.0%} of the box diameter from the edge")


def _offsets(n: int, d: int):
    """Nonzero integer offsets in a half-space (first nonzero component positive)."""
    for o in itertools.product(range(-(n - 1), n), repeat=d):
        if next((c for c in o if c != 0), 0) > 0:
            yield o


def _slices(o, n):
    """(x, x+o) index slices for the in-box part of a shifted grid."""
    here, there = [], []
    for c in o:
        if c >= 0:
            here.append(slice(0, n - c))
            there.append(slice(c, n))
        else:
            here.append(slice(-c, n))
            there.append(slice(0, n + c))
    return tuple(here), tuple(there)


def apply_mlap(u: GridFunction, M, fp: FractionalParams, kq: KernelQuadrature) -> GridFunction:
    """Sum over y != x of m((u(x)-u(y))/|x-y|^s) w(y) / |x-y|^{d+s}."""
    kq.check_support(u)
    dom = u.domain
    n, d = dom.n, dom.d
    shape = (n,) * d
    grid = u.values.reshape(shape)
    out = np.zeros(shape)
    h = dom.h
    w = dom.cell_volume
    for o in _offsets(n, d):
        r = float(np.linalg.norm(np.array(o) * h))
        a, b = _slices(o, n)
        term = np.asarray(M.m((grid[a] - grid[b]) / r ** fp.s)) * (w / r ** (d + fp.s))
        out[a] += term      # y = x + o
        out[b] -= term      # mirror: seen from x + o the partner sits at -o
    return GridFunction(dom, out.ravel())


def weak_pairing(u: GridFunction, v: GridFunction, M, fp: FractionalParams,
                 kq: KernelQuadrature) -> float:
    """(1/2) sum over x != y of m(h_u) h_v w w / |x-y|^d."""
    same_domain(u, v)
    kq.check_support(u)
    kq.check_support(v, "v")
    return _pairs.pairing_sum(_pairs.pair_table(u.domain), u.values, v.values, M.m, fp.s)


def consistency_check(u: GridFunction, v: GridFunction, M, fp: FractionalParams,
                      kq: KernelQuadrature) -> dict:
    """Compare the integrated pointwise operator against the weak form."""
    strong = apply_mlap(u, M, fp, kq).inner(v)
    weak = weak_pairing(u, v, M, fp, kq)
    denom = abs(weak)
    rel = abs(strong - weak) / denom if denom > 0 else abs(strong - weak)
    return {"strong": strong, "weak": weak, "abs_error": abs(strong - weak),
            "rel_error": rel, "n": u.domain.n}
