"""logdiff - Radial laboratory for the logarithmic diffusion equation u_t = Delta log u.

This package evolves radially symmetric solutions in physical and
self-similar variables, compares them with the explicit Barenblatt
solutions, and checks the contraction, sandwich and extinction properties
that govern their long-time behaviour.

Main classes:
    - RadialGrid, RadialProfile, TailLaw, MixedTailLaw: Radial discretization with far-field laws
    - BarenblattSpec: Parameters of one Barenblatt solution
    - Frame: Physical or self-similar coordinates
    - SolverConfig, EvolutionState: Implicit time stepping
    - DiagnosticsSeries: Per-step diagnostics of a run

Example:
    >>> from logdiff import make_grid, rescaled_barenblatt_profile, l1_distance
    >>> grid = make_grid(40.0, 400, 1.0, 3)
    >>> l1_distance(rescaled_barenblatt_profile(1.0, grid), rescaled_barenblatt_profile(4.0, grid))
    39.47...
"""

from logdiff.analysis import (
    check_contraction,
    l1_distance,
    match_k0,
    mean_value_coefficient,
    newtonian_potential_radial,
    green_potential_radial,
    weighted_l1_distance,
)
from logdiff.barenblatt import (
    BarenblattSpec,
    barenblatt_profile,
    barenblatt_value,
    rescale_identity_check,
    rescaled_barenblatt_profile,
)
from logdiff.diagnostics import DiagnosticsRecord, DiagnosticsSeries
from logdiff.grid import MixedTailLaw, RadialGrid, RadialProfile, TailLaw, integrate_difference, make_grid
from logdiff.solver import BoundaryCondition, EvolutionState, SolverConfig, evolve, step
from logdiff.transform import Frame, FrameKind, from_selfsimilar, to_selfsimilar

__version__ = "0.1.0"
__all__ = [
    "BarenblattSpec",
    "BoundaryCondition",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "EvolutionState",
    "Frame",
    "FrameKind",
    "MixedTailLaw",
    "RadialGrid",
    "RadialProfile",
    "SolverConfig",
    "TailLaw",
    "barenblatt_profile",
    "barenblatt_value",
    "check_contraction",
    "evolve",
    "from_selfsimilar",
    "green_potential_radial",
    "integrate_difference",
    "l1_distance",
    "make_grid",
    "match_k0",
    "mean_value_coefficient",
    "newtonian_potential_radial",
    "rescale_identity_check",
    "rescaled_barenblatt_profile",
    "step",
    "to_selfsimilar",
    "weighted_l1_distance",
]
