"""Terrain-following area-coverage lane planning.

Builds an elevation model from scattered survey samples, then plans field
coverage as a cascade of adjacent lanes: each lane floats a fixed height
above the terrain and sits one working width from its neighbour measured
along the tilted line connecting them, so swaths stay evenly spaced on
sloped ground. A flat 2-D baseline planner and coverage metrics are
included for comparison.
"""

from .errors import (
    GeometryError,
    LaneExitsExtent,
    MetricsError,
    OutsideTerrainExtent,
    PlanningError,
    PlanningFailure,
    TerrainDataError,
    ValidationError,
)
from .geometry import (
    FieldContour,
    HeadlandSpec,
    clip_lane,
    contains,
    extend_to_boundary,
    headland_rings,
    inward_offset,
    mainfield_boundary,
    seed_chord,
)
from .lines import Polyline3, resample_by_count
from .metrics import (
    CoverageReport,
    LanePairStats,
    LaneStats,
    PlannedLane,
    baseline_2d_plan,
    coverage_report,
    floating_lane_from_chord,
    gap_overlap_raster,
    ground_spacing_profile,
    lateral_deviation,
    oriented_seed_chord,
    polyline_deviation,
)
from .pipeline import PipelineResult, RunConfig, run_pipeline
from .planner import (
    SolverConfig,
    VehicleConfig,
    adjacent_lane,
    blend_roll,
    cascade_lanes,
    exact_projection_distance,
    initial_roll,
    min_tangential_spacing,
    refine_roll,
    resample_reference,
    segment_frame,
)
from .synth import SamplePattern, elevation_fn, synth_terrain
from .terrain import (
    GridBuildParams,
    SamplePoint,
    SpatialIndex,
    UniformGrid,
    build_uniform_grid,
    eval_bilinear,
    eval_bilinear_many,
    idw_elevation,
    knn,
)

__version__ = "0.1.0"

__all__ = [
    "CoverageReport",
    "FieldContour",
    "GeometryError",
    "GridBuildParams",
    "HeadlandSpec",
    "LaneExitsExtent",
    "LanePairStats",
    "LaneStats",
    "MetricsError",
    "OutsideTerrainExtent",
    "PipelineResult",
    "PlannedLane",
    "PlanningError",
    "PlanningFailure",
    "Polyline3",
    "RunConfig",
    "SamplePattern",
    "SamplePoint",
    "SolverConfig",
    "SpatialIndex",
    "TerrainDataError",
    "UniformGrid",
    "ValidationError",
    "VehicleConfig",
    "adjacent_lane",
    "baseline_2d_plan",
    "blend_roll",
    "build_uniform_grid",
    "cascade_lanes",
    "clip_lane",
    "contains",
    "coverage_report",
    "elevation_fn",
    "eval_bilinear",
    "eval_bilinear_many",
    "exact_projection_distance",
    "extend_to_boundary",
    "floating_lane_from_chord",
    "gap_overlap_raster",
    "ground_spacing_profile",
    "headland_rings",
    "idw_elevation",
    "initial_roll",
    "inward_offset",
    "knn",
    "lateral_deviation",
    "mainfield_boundary",
    "min_tangential_spacing",
    "oriented_seed_chord",
    "polyline_deviation",
    "refine_roll",
    "resample_by_count",
    "resample_reference",
    "run_pipeline",
    "seed_chord",
    "segment_frame",
    "synth_terrain",
]
