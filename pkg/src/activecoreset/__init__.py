"""Obstacle discovery through a membership oracle, and planners that sample around it.

The usual flow: wrap the world in a :class:`MembershipOracle`, call
:func:`preprocess` to discover obstacles (MVEE coresets, then enclosing
cross-polytopes cut out of a triangulated free space), and hand the result
to :func:`rrt` or :func:`rrt_star` through a :class:`FreeSpaceSampler`.
"""
from .errors import (
    ActiveCoresetError,
    ConvergenceError,
    DegenerateHullError,
    DegenerateObstacleError,
    FreeSpaceExhaustedError,
    MapFileNotFoundError,
    MapFormatError,
    OracleInconsistencyError,
    PreconditionError,
    ScenarioError,
    UnboundedObstacleError,
)
from .extremal import FarthestResult, farthest
from .freespace import (
    Region,
    SamplerState,
    TriangulatedFreeSpace,
    batch_free_space,
    remove_polytope,
    sample,
    sample_many,
    triangulate_bounds,
)
from .gjk import gjk_distance, gjk_intersects
from .mvee import (
    CoresetPointSet,
    CrossPolytope,
    Ellipsoid,
    StepTrace,
    approx_mve_coreset,
    cross_polytope_bound,
    mahalanobis_farthest,
    mve_coreset,
    mvee_of_points,
)
from .oracle import (
    AnalyticOracle,
    BitmapOracle,
    BoxShape,
    EllipsoidShape,
    MembershipOracle,
    OracleStats,
    PolytopeShape,
    RecordingOracle,
    WorkspaceMeta,
    make_analytic_oracle,
    make_bitmap_oracle,
    shape_from_dict,
)
from .planners import (
    Discovery,
    FreeSpaceSampler,
    PlannerConfig,
    PlanResult,
    UniformSampler,
    preprocess,
    rrt,
    rrt_star,
)
from .ray_search import RaySearchResult, extreme_along_ray

__version__ = "0.1.0"
