"""Radial charge-conserving Poisson-Boltzmann (CCPB) toolkit.

Finite-volume Newton solver with eps-continuation, closed-form boundary
layer asymptotics, and diagnostics comparing the two.
"""

from .asymptotics import (
    boundary_expansion,
    capacitance_limit,
    coefficient_limits,
    delta_weights,
    gradient_closure,
    interior_expansion,
    layer_profile,
)
from .diagnostics import (
    capacitance_numeric,
    delta_weight_estimate,
    inequality_suite,
    norm_decay_fit,
    pohozaev_check,
    validate_report,
)
from .mesh import GeometricSpec, Mesh, TwoZoneSpec, UniformSpec, build_mesh, integrate_radial
from .model import DielectricProfile, ModelParams, derived_constants, p0, validate_params
from .solver import (
    Solution,
    SolverOptions,
    assemble_system,
    default_ladder,
    evaluate_solution,
    robin_transform,
    solve_continuation,
    solve_newton,
)

__version__ = "0.1.0"
