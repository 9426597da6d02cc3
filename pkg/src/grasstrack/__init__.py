"""Subspace tracking with dynamical models on the Grassmann manifold."""

from .errors import (
    ConfigError,
    DimensionMismatch,
    GrassmannError,
    HistoryNotRecorded,
    NotAnchored,
    OutsideInjectivityRadius,
    RankDeficient,
    TrajectoryTooShort,
    UnsupportedGradient,
)
from .manifold import (
    GrassmannPoint,
    PrincipalAngles,
    TangentVector,
    chordal_distance,
    exp_map,
    geodesic_distance,
    geodesic_step,
    log_map,
    orthonormalize,
    principal_angles,
    projector_difference,
    tangent_project,
)
from .objectives import BatchSet, RegularizerKind, Trajectory
from .optimizer import DescentConfig, DescentReport, objective_trace, rls_descend

__version__ = "0.1.0"
