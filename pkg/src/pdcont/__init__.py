"""Deform point clouds so their persistence diagrams track a prescribed path.

The package computes persistence diagrams of 3D point clouds via Vietoris-Rips
and alpha filtrations, differentiates the diagram coordinates with respect to
the points, and runs a pseudo-inverse Newton continuation that carries a cloud
from its current diagram to a target diagram.
"""

from .errors import (
    DegenerateInput,
    DegenerateSimplex,
    DimensionMismatch,
    EmptyDiagram,
    GaugeViolation,
    GeneralPositionViolation,
    InfinityMismatch,
    MatchingAmbiguous,
    NearDegenerateJacobian,
    NotAcute,
    PdcontError,
)
from .geometry import (
    Configuration,
    check_general_position,
    circumradius,
    circumradius_gradient,
    pack,
    rips_birth_radius,
    simplex_key,
    to_gauge_frame,
    unpack,
)
from .delaunay import DelaunayComplex, delaunay3, is_attaching
from .filtration import FilteredComplex, build_alpha, build_rips
from .persistence import (
    PersistenceData,
    betti_numbers,
    boundary_matrix,
    diagram,
    persistence_data,
    reduce_boundary,
    reduce_boundary_twist,
)
from .metrics import (
    bottleneck,
    bottleneck_exhaustive,
    diag_distance,
    hausdorff,
    triangle_ratio_check,
)
from .diffmap import (
    Constraint,
    PersistenceJacobian,
    centroid_constraints,
    constrained_system,
    distance_constraint,
    jacobian,
    singular_values,
)
from .solver import (
    ContinuationTrace,
    NewtonReport,
    NewtonStatus,
    continue_cloud,
    newton_pinv,
    pinv_apply,
    pinv_matrix,
    svd,
)

__version__ = "0.1.0"
