"""Museum visit flows from geotagged short messages.

The library turns a raw message corpus into an observed origin-destination
matrix (filtering, home inference, aggregation), evaluates spatial
interaction models against it, and calibrates the distance-decay exponent
by grid search. A synthetic generator closes the loop for end-to-end
parameter-recovery experiments, and the `museumflows` command drives the
whole thing from files.
"""

from .calibration import (
    BetaGrid,
    FitMetrics,
    SweepResult,
    compare_specifications,
    fit_at_beta,
    pearson_r,
    rms_error,
    spec_name,
    sweep_beta,
)
from .errors import (
    AmbiguousZoneError,
    ConvergenceError,
    DataFormatError,
    DegenerateFactorError,
    DegenerateModelError,
    DegenerateVarianceError,
    EmptyInputError,
    FlowModelError,
    InvalidAttributeError,
    InvalidCoordinateError,
    InvalidGeometryError,
    InvalidParameterError,
    MarginalMismatchError,
    ShapeError,
    SingularDistanceError,
    UnreachableOriginError,
)
from .geometry import (
    EARTH_RADIUS_KM,
    EARTH_RADIUS_M,
    GeoPoint,
    GridCell,
    PlanarPoint,
    PolygonM,
    distance_to_polygon_m,
    haversine_km,
    point_in_polygon,
    point_on_boundary,
    polygon_centroid_area,
    project,
    snap_to_grid,
    unproject,
)
from .pipeline import (
    PipelineReport,
    PipelineResult,
    StageCount,
    TaggedFeature,
    Tweet,
    UserHome,
    assign_home_zone,
    assign_nearest_museum,
    build_observed_matrix,
    corpus_frame,
    dedup,
    extract_museums,
    infer_home_locations,
    remove_automated_accounts,
    remove_checkins,
    run_pipeline,
    semantic_filter,
    spatial_filter,
    tokenize,
    zone_coverage_summary,
)
from .sim import (
    AttractivenessSpec,
    Deterrence,
    FlowMatrix,
    ModelSpec,
    Museum,
    Zone,
    attractiveness_weights,
    demand_weights,
    deterrence_matrix,
    deterrence_value,
    distance_matrix,
    doubly_constrained_flows,
    model_matrix,
    origin_constrained_flows,
    unconstrained_flows,
)
from .synth import (
    DemoRegion,
    RecoveryReport,
    SynthConfig,
    demo_region,
    generate_corpus,
    recovery_report,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousZoneError",
    "AttractivenessSpec",
    "BetaGrid",
    "ConvergenceError",
    "DataFormatError",
    "DegenerateFactorError",
    "DegenerateModelError",
    "DegenerateVarianceError",
    "DemoRegion",
    "Deterrence",
    "EARTH_RADIUS_KM",
    "EARTH_RADIUS_M",
    "EmptyInputError",
    "FitMetrics",
    "FlowMatrix",
    "FlowModelError",
    "GeoPoint",
    "GridCell",
    "InvalidAttributeError",
    "InvalidCoordinateError",
    "InvalidGeometryError",
    "InvalidParameterError",
    "MarginalMismatchError",
    "ModelSpec",
    "Museum",
    "PipelineReport",
    "PipelineResult",
    "PlanarPoint",
    "PolygonM",
    "RecoveryReport",
    "ShapeError",
    "SingularDistanceError",
    "StageCount",
    "SweepResult",
    "SynthConfig",
    "TaggedFeature",
    "Tweet",
    "UnreachableOriginError",
    "UserHome",
    "Zone",
    "assign_home_zone",
    "assign_nearest_museum",
    "attractiveness_weights",
    "build_observed_matrix",
    "compare_specifications",
    "corpus_frame",
    "dedup",
    "demand_weights",
    "demo_region",
    "deterrence_matrix",
    "deterrence_value",
    "distance_matrix",
    "distance_to_polygon_m",
    "doubly_constrained_flows",
    "extract_museums",
    "fit_at_beta",
    "generate_corpus",
    "haversine_km",
    "infer_home_locations",
    "model_matrix",
    "origin_constrained_flows",
    "pearson_r",
    "point_in_polygon",
    "point_on_boundary",
    "polygon_centroid_area",
    "project",
    "recovery_report",
    "remove_automated_accounts",
    "remove_checkins",
    "rms_error",
    "run_pipeline",
    "semantic_filter",
    "snap_to_grid",
    "spatial_filter",
    "spec_name",
    "sweep_beta",
    "tokenize",
    "unconstrained_flows",
    "unproject",
    "zone_coverage_summary",
]
