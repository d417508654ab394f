"""The model Schroedinger-type energy, its checks and the multiplicity search."""

from .checks import (compactness_probe, convexity_inequality_check, derivative_bound_check,
                     embedding_constant, energy_sandwich_check, norm_bound_check)
from .fountain import b_coercivity_check, fountain_diagnostics, lk_table, subspace_lk
from .ladder import SubspaceLadder, sine_ladder
from .problem import (EnergyBreakdown, ProblemSpec, e_norm, energy, grad_energy, prototype,
                      residual)
from .search import CriticalPoint, find_critical_points

__all__ = [
    "CriticalPoint", "EnergyBreakdown", "ProblemSpec", "SubspaceLadder",
    "b_coercivity_check", "compactness_probe", "convexity_inequality_check",
    "derivative_bound_check", "e_norm", "embedding_constant", "energy", "energy_sandwich_check",
    "find_critical_points", "fountain_diagnostics", "grad_energy", "lk_table", "norm_bound_check",
    "prototype", "residual", "sine_ladder", "subspace_lk",
]
