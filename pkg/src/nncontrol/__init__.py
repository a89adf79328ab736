"""Nearest-neighbour quantised output feedback for passive systems."""

from .action_sets import (
    ActionSet,
    ValidationReport,
    Variant,
    centered_regular_simplex,
    design_minimal_set,
    grid_set,
    planar_trine,
    regular_simplex,
    validate,
)
from .controller import (
    FeedbackLaw,
    LawVariant,
    NearestNeighborLaw,
    SectorFeedback,
    check_proposition1,
    check_proposition2,
    largest_delta,
    phi,
    phi_incremental,
    phi_sector,
)
from .geometry import (
    HalfspaceSystem,
    SamplingConfig,
    contains_in_interior,
    covering_radius,
    enumerate_vertices,
    is_bounded,
    min_alignment,
    voronoi_halfspaces,
)
from .simulator import SimConfig, Trajectory, batch_sweep, convergence_metrics, simulate
from .systems import (
    ControlAffineSystem,
    SteadyStatePair,
    incremental_system,
    observability_gramian,
    sigma_ex,
)

__all__ = [
    "SimConfig",
    "Trajectory",
    "batch_sweep",
    "convergence_metrics",
    "simulate",
    "ActionSet",
    "centered_regular_simplex",
    "check_proposition1",
    "check_proposition2",
    "contains_in_interior",
    "ControlAffineSystem",
    "covering_radius",
    "design_minimal_set",
    "enumerate_vertices",
    "FeedbackLaw",
    "grid_set",
    "HalfspaceSystem",
    "incremental_system",
    "is_bounded",
    "largest_delta",
    "LawVariant",
    "min_alignment",
    "NearestNeighborLaw",
    "observability_gramian",
    "phi",
    "phi_incremental",
    "phi_sector",
    "planar_trine",
    "regular_simplex",
    "SamplingConfig",
    "SectorFeedback",
    "sigma_ex",
    "SteadyStatePair",
    "validate",
    "ValidationReport",
    "Variant",
    "voronoi_halfspaces",
]

__version__ = "0.1.0"
