"""End-to-end batch pipeline: files in, planned lanes and reports out.

A run ingests a terrain file (scattered samples or a pre-built grid cache)
and a field contour, builds the elevation grid, plans the terrain-following
lanes and/or the flat baseline, and writes all artifacts into the output
directory: grid cache, lane CSV + GeoJSON, metrics JSON, optional SVG
figures, and a run manifest with every parameter and input digest. Repeat
runs over identical inputs are byte-identical.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileio, report
from .errors import MetricsError, PlanningFailure, ValidationError
from .geometry import FieldContour, HeadlandSpec, headland_rings, mainfield_boundary, project_vertical
from .metrics import (
    CoverageReport,
    PlannedLane,
    baseline_2d_plan,
    coverage_counts,
    coverage_report,
    floating_lane_from_chord,
    lateral_deviation,
    oriented_seed_chord,
)
from .planner import SolverConfig, VehicleConfig, cascade_lanes
from .terrain import GridBuildParams, UniformGrid, build_uniform_grid

VERSION = "0.1.0"

MODES = ("plan", "baseline", "compare")


@dataclass
class RunConfig:
    """Everything one batch run needs; all angles in radians."""

    terrain_path: Path
    contour_path: Path
    out_dir: Path
    vehicle: VehicleConfig
    mode: str = "plan"
    solver: SolverConfig = field(default_factory=SolverConfig)
    grid: GridBuildParams = field(default_factory=GridBuildParams)
    headland_passes: int = 0
    seed_edge: int | None = None
    max_lanes: int = 500
    raster_cell: float = 1.0
    sample_step: float = 5.0
    svg: bool = False

    def __post_init__(self):
        self.terrain_path = Path(self.terrain_path)
        self.contour_path = Path(self.contour_path)
        self.out_dir = Path(self.out_dir)
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode: {self.mode}")
        if self.headland_passes < 0:
            raise ValidationError("headland passes must be non-negative")

    @property
    def headland(self) -> HeadlandSpec:
        # Each headland ring is one machine pass, so one working width wide.
        return HeadlandSpec(self.headland_passes, self.vehicle.working_width)


@dataclass
class PipelineResult:
    """In-memory view of a finished run, for tests and callers."""

    config: RunConfig
    terrain: UniformGrid
    contour: FieldContour
    mainfield: FieldContour
    headland_lanes: list[PlannedLane]
    plan_lanes: list[PlannedLane] | None
    baseline_lanes: list[PlannedLane] | None
    plan_report: CoverageReport | None
    baseline_report: CoverageReport | None
    plan_profiles: list[np.ndarray]
    baseline_profiles: list[np.ndarray]
    comparison: dict | None
    artifacts: dict[str, Path]
    manifest: dict


def _jsonable(obj):
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def load_terrain_grid(path: Path, grid: GridBuildParams) -> UniformGrid:
    """Grid cache files load directly; sample files are gridded first."""
    if fileio.is_grid_cache(path):
        return fileio.read_grid_cache(path)
    samples = fileio.read_terrain(path)
    return build_uniform_grid(samples, grid)


def gridify(terrain_path: Path, out_path: Path, grid: GridBuildParams) -> UniformGrid:
    """Build the elevation grid from a sample file and cache it."""
    built = load_terrain_grid(terrain_path, grid)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fileio.write_grid_cache(out_path, built)
    return built


def _plan_3d(
    cfg: RunConfig, terrain: UniformGrid, contour: FieldContour, mainfield: FieldContour
) -> list[PlannedLane]:
    p0, p1 = oriented_seed_chord(
        contour, mainfield, cfg.vehicle, cfg.solver, cfg.headland, cfg.seed_edge
    )
    seed = floating_lane_from_chord(p0, p1, terrain, cfg.vehicle, cfg.solver)
    cascaded = cascade_lanes(
        seed, terrain, mainfield, cfg.vehicle, cfg.solver, cfg.max_lanes
    )
    lanes = [PlannedLane(lane_id=0, line=seed, kind="seed")]
    for i, lane in enumerate(cascaded, start=1):
        lanes.append(
            PlannedLane(
                lane_id=i,
                line=lane.line,
                kind="adjacent",
                diagnostics=lane.diagnostics,
                excessive_roll=lane.excessive_roll,
                exited_extent=lane.exited_extent,
            )
        )
    converged = sum(
        sum(1 for p in lane.diagnostics if p.converged)
        for lane in lanes
        if lane.diagnostics
    )
    if len(lanes) < 2 or converged == 0:
        raise PlanningFailure(
            "no converged lane", lanes=len(lanes) - 1, converged_points=converged
        )
    return lanes


def _baseline(
    cfg: RunConfig, terrain: UniformGrid, contour: FieldContour
) -> list[PlannedLane]:
    lines = baseline_2d_plan(
        contour,
        terrain,
        cfg.vehicle,
        cfg.solver,
        cfg.headland,
        cfg.seed_edge,
        cfg.max_lanes,
    )
    return [PlannedLane(lane_id=i, line=line, kind="baseline") for i, line in enumerate(lines)]


def _headland_lanes(
    cfg: RunConfig, terrain: UniformGrid, contour: FieldContour
) -> list[PlannedLane]:
    lanes = []
    for i, ring in enumerate(headland_rings(contour, cfg.headland)):
        line = project_vertical(ring, terrain, lift=cfg.vehicle.boom_height)
        lanes.append(PlannedLane(lane_id=i, line=line, kind="headland"))
    return lanes


def _report_dict(rep: CoverageReport, profiles: list[np.ndarray]) -> dict:
    out = _jsonable(rep)
    out["spacing_profiles"] = [_jsonable(p) for p in profiles]
    out["lane_count"] = len(rep.lanes)
    return out


def _parameters_dict(cfg: RunConfig) -> dict:
    v, s, g = cfg.vehicle, cfg.solver, cfg.grid
    return {
        "mode": cfg.mode,
        "working_width": v.working_width,
        "boom_height": v.boom_height,
        "axle_half_width": v.axle_half_width,
        "max_roll_deg": math.degrees(v.max_roll),
        "tolerance": s.tolerance,
        "roll_step_deg": math.degrees(s.roll_step),
        "max_heading_change_deg": math.degrees(s.max_heading_change),
        "offset_side": s.offset_side,
        "grid_spacing": g.grid_spacing,
        "idw_extra_neighbors": g.idw_extra_neighbors,
        "headland_passes": cfg.headland_passes,
        "headland_pass_width": cfg.headland.pass_width if cfg.headland_passes else 0.0,
        "seed_edge": cfg.seed_edge,
        "max_lanes": cfg.max_lanes,
        "raster_cell": cfg.raster_cell,
        "sample_step": cfg.sample_step,
        "svg": cfg.svg,
    }


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Execute one batch run and write all artifacts.

    Raises PlanningError subclasses on any failure; the CLI maps those to
    exit codes. Lane and metric files only appear once planning succeeded,
    and every file is written atomically.
    """
    if not cfg.terrain_path.exists():
        raise FileNotFoundError(cfg.terrain_path)
    if not cfg.contour_path.exists():
        raise FileNotFoundError(cfg.contour_path)
    terrain = load_terrain_grid(cfg.terrain_path, cfg.grid)
    contour = fileio.read_contour(cfg.contour_path)
    mainfield = mainfield_boundary(contour, cfg.headland)

    headlands = _headland_lanes(cfg, terrain, contour)
    plan_lanes = baseline_lanes = None
    plan_rep = baseline_rep = None
    plan_profiles: list[np.ndarray] = []
    baseline_profiles: list[np.ndarray] = []
    if cfg.mode in ("plan", "compare"):
        plan_lanes = _plan_3d(cfg, terrain, contour, mainfield)
        plan_rep, plan_profiles = coverage_report(
            plan_lanes, terrain, cfg.vehicle, mainfield, cfg.raster_cell, cfg.sample_step
        )
    if cfg.mode in ("baseline", "compare"):
        baseline_lanes = _baseline(cfg, terrain, contour)
        baseline_rep, baseline_profiles = coverage_report(
            baseline_lanes, terrain, cfg.vehicle, mainfield, cfg.raster_cell, cfg.sample_step
        )

    comparison = None
    if plan_lanes is not None and baseline_lanes is not None:
        try:
            deviation = lateral_deviation(
                [l.line for l in plan_lanes], [l.line for l in baseline_lanes]
            )
        except MetricsError:
            deviation = None  # lane counts differ; per-lane deviation undefined
        comparison = {
            "max_lateral_deviation": deviation,
            "lane_count_plan": len(plan_lanes),
            "lane_count_baseline": len(baseline_lanes),
            "gap_fraction_plan": plan_rep.gap_fraction,
            "gap_fraction_baseline": baseline_rep.gap_fraction,
            "overlap_fraction_plan": plan_rep.overlap_fraction,
            "overlap_fraction_baseline": baseline_rep.overlap_fraction,
        }

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, Path] = {}

    def out(name: str) -> Path:
        path = cfg.out_dir / name
        artifacts[name] = path
        return path

    fileio.write_grid_cache(out("grid_cache.csv"), terrain)
    if headlands:
        fileio.write_lanes_csv(out("headland_lanes.csv"), headlands)
        fileio.write_lanes_geojson(out("headland_lanes.geojson"), headlands)
    if plan_lanes is not None:
        fileio.write_lanes_csv(out("lanes.csv"), plan_lanes)
        fileio.write_lanes_geojson(out("lanes.geojson"), plan_lanes)
    if baseline_lanes is not None:
        fileio.write_lanes_csv(out("baseline_lanes.csv"), baseline_lanes)
        fileio.write_lanes_geojson(out("baseline_lanes.geojson"), baseline_lanes)

    metrics: dict = {"mode": cfg.mode}
    if plan_rep is not None:
        metrics["plan"] = _report_dict(plan_rep, plan_profiles)
    if baseline_rep is not None:
        metrics["baseline"] = _report_dict(baseline_rep, baseline_profiles)
    if comparison is not None:
        metrics["comparison"] = _jsonable(comparison)
    fileio.write_json(out("metrics.json"), metrics)

    if cfg.svg:
        shown = list(headlands)
        if plan_lanes is not None:
            shown += plan_lanes
        if baseline_lanes is not None:
            shown += baseline_lanes
        report.render_plan_figure(
            out("plan.svg"), contour, shown, mainfield=mainfield, terrain=terrain
        )
        for key, lanes in (("plan", plan_lanes), ("baseline", baseline_lanes)):
            if lanes is None:
                continue
            counts, _, origin = coverage_counts(
                [l for l in lanes if l.kind != "headland"],
                terrain,
                cfg.vehicle,
                mainfield,
                cfg.raster_cell,
            )
            report.render_coverage_figure(
                out(f"coverage_{key}.svg"), mainfield, counts, cfg.raster_cell, origin
            )

    manifest = {
        "version": VERSION,
        "parameters": _jsonable(_parameters_dict(cfg)),
        "inputs": {
            "terrain": {
                "path": cfg.terrain_path.name,
                "sha256": fileio.sha256_file(cfg.terrain_path),
            },
            "contour": {
                "path": cfg.contour_path.name,
                "sha256": fileio.sha256_file(cfg.contour_path),
            },
        },
        "outputs": {name: fileio.sha256_file(path) for name, path in sorted(artifacts.items())},
    }
    fileio.write_json(out("manifest.json"), manifest)

    return PipelineResult(
        config=cfg,
        terrain=terrain,
        contour=contour,
        mainfield=mainfield,
        headland_lanes=headlands,
        plan_lanes=plan_lanes,
        baseline_lanes=baseline_lanes,
        plan_report=plan_rep,
        baseline_report=baseline_rep,
        plan_profiles=plan_profiles,
        baseline_profiles=baseline_profiles,
        comparison=comparison,
        artifacts=artifacts,
        manifest=manifest,
    )
