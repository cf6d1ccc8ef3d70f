"""Equivariant harmonic maps on the twisted half-cylinder, plus the scalar Laplace suite.

Kernels come from the compiled extension when it is built and from numpy
otherwise; ``BACKEND`` names the active one.
"""

from ._backend import BACKEND, available
from .grid import (
    EquivariantField,
    HalfCylinderGrid,
    SupDist,
    discrete_energy,
    field_distance,
    init_field,
    sample_field,
    seam_residual,
    sup_dist,
    sup_dist_to_model,
    tension_field,
    tension_residual,
    write_csv,
)
from .relax import ExhaustionResult, RelaxResult, Stage, exhaustion_solve, model_row, relax
from .scalar import (
    CutoffCheck,
    ScalarField,
    band_sup_sequence,
    cutoff_inequality_check,
    cutoff_profile,
    scalar_harmonic_solve,
    separable_solution,
)

__all__ = [
    "BACKEND",
    "CutoffCheck",
    "EquivariantField",
    "ExhaustionResult",
    "HalfCylinderGrid",
    "RelaxResult",
    "ScalarField",
    "Stage",
    "SupDist",
    "available",
    "band_sup_sequence",
    "cutoff_inequality_check",
    "cutoff_profile",
    "discrete_energy",
    "exhaustion_solve",
    "field_distance",
    "init_field",
    "model_row",
    "relax",
    "sample_field",
    "scalar_harmonic_solve",
    "seam_residual",
    "separable_solution",
    "sup_dist",
    "sup_dist_to_model",
    "tension_field",
    "tension_residual",
    "write_csv",
]
