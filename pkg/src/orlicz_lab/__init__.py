"""Numerical laboratory for fractional Orlicz-Sobolev spaces."""

__version__ = "0.1.0"

from .errors import (DomainError, InvalidSpecError, PreconditionError, RangeError,
                     ShapeError, UnsupportedSpecError)
from .grid import (BoxDomain, GridFunction, lmu_norm, luxemburg_norm, modular, orlicz_norm,
                   weighted_luxemburg)
from .nfunc import (IndexPair, NFunctionSpec, check_growth, estimate_indices, eval_conjugate,
                    eval_M, sobolev_conjugate, young_gap)
from .operator import KernelQuadrature, apply_mlap, consistency_check, weak_pairing
from .sobolev import FractionalParams, SeminormBundle, gagliardo_seminorm, norm_bundle

__all__ = [
    "BoxDomain", "DomainError", "FractionalParams", "GridFunction", "IndexPair",
    "InvalidSpecError", "KernelQuadrature", "NFunctionSpec", "PreconditionError",
    "RangeError", "SeminormBundle", "ShapeError", "UnsupportedSpecError", "apply_mlap",
    "check_growth", "consistency_check", "estimate_indices", "eval_M", "eval_conjugate",
    "gagliardo_seminorm", "lmu_norm", "luxemburg_norm", "modular", "norm_bundle",
    "orlicz_norm", "sobolev_conjugate", "weak_pairing", "weighted_luxemburg", "young_gap",
]
