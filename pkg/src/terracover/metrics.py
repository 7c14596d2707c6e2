"""Coverage quality metrics and the flat-planned baseline for comparison.

The baseline plans straight parallel lanes spaced exactly one working width
apart in the map plane and then drops them onto the terrain; on sloped
ground its swaths drift apart along the surface. The metrics quantify that:
ground-arc spacing between neighbouring lanes, lateral deviation between
two plans, and rasterised gap/overlap fractions of the sprayed footprint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from matplotlib.path import Path as MplPath
from scipy.spatial import cKDTree

from .errors import MetricsError
from .geometry import (
    FieldContour,
    HeadlandSpec,
    clip_lane,
    mainfield_boundary,
    project_vertical,
    seed_chord,
)
from .lines import Polyline3, sample_with_heading
from .planner import (
    LanePointResult,
    SolverConfig,
    VehicleConfig,
    min_tangential_spacing,
    nearest_surface_point,
    resample_reference,
)
from .terrain import UniformGrid, eval_bilinear_many


@dataclass
class PlannedLane:
    """One lane of a finished plan, with solver diagnostics when available."""

    lane_id: int
    line: Polyline3
    kind: str = "adjacent"  # seed | adjacent | baseline | headland
    diagnostics: list[LanePointResult] | None = None
    excessive_roll: bool = False
    exited_extent: bool = False


@dataclass
class LaneStats:
    lane_id: int
    kind: str
    n_points: int
    max_abs_roll: float
    h_proj_min: float | None
    h_proj_max: float | None
    converged_fraction: float | None
    excessive_roll: bool

    def __post_init__(self):
        if self.converged_fraction is not None and not (0.0 <= self.converged_fraction <= 1.0):
            raise MetricsError("converged fraction out of [0, 1]")


@dataclass
class LanePairStats:
    lane_a: int
    lane_b: int
    n_samples: int
    mean_spacing: float
    min_spacing: float
    max_spacing: float
    mean_abs_error: float  # |spacing - working width|
    max_abs_error: float
    implied_roll_max: float  # tilt of the connecting arm, diagnostic only

    def __post_init__(self):
        if self.n_samples > 0 and self.max_spacing < self.mean_spacing - 1e-12:
            raise MetricsError("pair spacing max below mean")
        if self.n_samples > 0 and self.max_abs_error < self.mean_abs_error - 1e-12:
            raise MetricsError("pair error max below mean")


@dataclass
class CoverageReport:
    lanes: list[LaneStats]
    pairs: list[LanePairStats]
    gap_fraction: float
    overlap_fraction: float
    max_lateral_deviation: float | None = None

    def __post_init__(self):
        for name, frac in (("gap", self.gap_fraction), ("overlap", self.overlap_fraction)):
            if not (0.0 <= frac <= 1.0):
                raise MetricsError(f"{name} fraction out of [0, 1]")


def oriented_seed_chord(
    contour: FieldContour,
    mainfield: FieldContour,
    vehicle: VehicleConfig,
    solver: SolverConfig,
    headland: HeadlandSpec = HeadlandSpec(),
    seed_edge: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Seed chord endpoints ordered so the offset side faces the interior.

    The chord runs parallel to the chosen contour edge, inset by the
    headland depth plus half a working width, and is clipped to the
    mainfield boundary.
    """
    inset = headland.passes * headland.pass_width + 0.5 * vehicle.working_width
    p0, p1 = seed_chord(contour, inset, seed_edge, clip_to=mainfield)
    if solver.offset_side == "right":
        p0, p1 = p1, p0
    return p0, p1


def floating_lane_from_chord(
    p0: Sequence[float],
    p1: Sequence[float],
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    solver: SolverConfig,
) -> Polyline3:
    """Drop a straight 2-D chord onto the terrain at boom height.

    The chord is densified first so the projected line actually follows the
    surface, then resampled to the reference spacing.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    d_min = min_tangential_spacing(vehicle.working_width, solver.max_heading_change)
    n_seg = max(1, int(math.ceil(length / d_min)))
    ts = np.linspace(0.0, 1.0, n_seg + 1)
    path = [(float(p0[0] + t * (p1[0] - p0[0])), float(p0[1] + t * (p1[1] - p0[1]))) for t in ts]
    lifted = project_vertical(path, terrain, lift=vehicle.boom_height)
    return resample_reference(lifted, vehicle, solver)


def baseline_2d_plan(
    contour: FieldContour,
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    solver: SolverConfig,
    headland: HeadlandSpec = HeadlandSpec(),
    seed_edge: int | None = None,
    max_lanes: int = 500,
) -> list[Polyline3]:
    """Straight parallel lanes spaced exactly w in the map plane.

    Lane k is the seed chord's line shifted k working widths toward the
    field interior, clipped to the mainfield and vertically projected at
    boom height. Stops at the first shift that misses the mainfield.
    """
    mainfield = mainfield_boundary(contour, headland)
    p0, p1 = oriented_seed_chord(contour, mainfield, vehicle, solver, headland, seed_edge)
    u = (p1 - p0) / np.hypot(*(p1 - p0))
    inward = np.array([-u[1], u[0]])  # offset side faces interior by construction
    x0, y0, x1, y1 = mainfield.bounds()
    reach = 2.0 * math.hypot(x1 - x0, y1 - y0)
    lanes: list[Polyline3] = []
    for k in range(max_lanes):
        center = 0.5 * (p0 + p1) + (k * vehicle.working_width) * inward
        carrier = Polyline3(
            np.array(
                [
                    [center[0] - reach * u[0], center[1] - reach * u[1], 0.0],
                    [center[0] + reach * u[0], center[1] + reach * u[1], 0.0],
                ]
            )
        )
        pieces = clip_lane(carrier, mainfield)
        if not pieces:
            break
        chord = max(pieces, key=lambda piece: piece.length(2))
        a = chord.points[0, :2]
        b = chord.points[-1, :2]
        if np.dot(b - a, u) < 0:
            a, b = b, a
        lanes.append(floating_lane_from_chord(a, b, terrain, vehicle, solver))
    return lanes


def _cross_section_point(
    lane: Polyline3, origin: np.ndarray, along: np.ndarray
) -> np.ndarray | None:
    """Lane point in the plane through origin perpendicular to `along` (2-D unit)."""
    pts = lane.points
    s = (pts[:, 0] - origin[0]) * along[0] + (pts[:, 1] - origin[1]) * along[1]
    best = None
    best_abs = None
    for i in range(len(pts) - 1):
        s0, s1 = s[i], s[i + 1]
        if s0 == 0.0:
            q = pts[i]
        elif (s0 < 0) == (s1 < 0):
            continue
        else:
            t = s0 / (s0 - s1)
            q = pts[i] + t * (pts[i + 1] - pts[i])
        lateral = abs(
            (q[0] - origin[0]) * (-along[1]) + (q[1] - origin[1]) * along[0]
        )
        if best_abs is None or lateral < best_abs:
            best, best_abs = q.copy(), lateral
    if best is None and s[-1] == 0.0:
        best = pts[-1].copy()
    return best


def _terrain_arc(
    foot_a: np.ndarray, foot_b: np.ndarray, terrain: UniformGrid, step: float
) -> float:
    """Surface arc length between two foot points along the straight map path."""
    run = math.hypot(foot_b[0] - foot_a[0], foot_b[1] - foot_a[1])
    if run == 0.0:
        return 0.0
    n = max(1, int(math.ceil(run / step)))
    ts = np.linspace(0.0, 1.0, n + 1)
    xs = foot_a[0] + ts * (foot_b[0] - foot_a[0])
    ys = foot_a[1] + ts * (foot_b[1] - foot_a[1])
    zs = eval_bilinear_many(terrain, xs, ys)
    return float(np.sum(np.sqrt(np.diff(xs) ** 2 + np.diff(ys) ** 2 + np.diff(zs) ** 2)))


def ground_spacing_profile(
    lane_a: Polyline3,
    lane_b: Polyline3,
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    sample_step: float = 5.0,
) -> np.ndarray:
    """Along-terrain distance from lane A to lane B at regular stations.

    At each station the lane B point in the boom-normal plane is found, both
    points are dropped to their exact terrain foot points, and the surface
    arc between the feet is integrated at half the grid spacing. Stations
    with no lane B crossing (non-overlapping spans) are skipped.
    """
    radius = 3.0 * vehicle.boom_height
    fine = terrain.spacing / 4.0
    arc_step = terrain.spacing / 2.0
    stations, headings = sample_with_heading(lane_a, sample_step)
    out = []
    for p, psi in zip(stations, headings):
        along = np.array([math.cos(psi), math.sin(psi)])
        q = _cross_section_point(lane_b, p[:2], along)
        if q is None:
            continue
        foot_p, _ = nearest_surface_point(p, terrain, radius, fine, clamp=True)
        foot_q, _ = nearest_surface_point(q, terrain, radius, fine, clamp=True)
        out.append(_terrain_arc(foot_p, foot_q, terrain, arc_step))
    return np.array(out)


def _point_segment_dist(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    v = b - a
    w = p - a
    seg2 = float(np.dot(v, v))
    t = 0.0 if seg2 == 0.0 else max(0.0, min(1.0, float(np.dot(w, v)) / seg2))
    d = w - t * v
    return float(np.sqrt(np.dot(d, d)))


def _directed_hausdorff(a: Polyline3, b: Polyline3, dims: int) -> float:
    worst = 0.0
    bp = b.points[:, :dims]
    for p in a.points[:, :dims]:
        best = math.inf
        for i in range(len(bp) - 1):
            best = min(best, _point_segment_dist(p, bp[i], bp[i + 1]))
            if best == 0.0:
                break
        worst = max(worst, best)
    return worst


def polyline_deviation(a: Polyline3, b: Polyline3, dims: int = 2) -> float:
    """Symmetric Hausdorff distance between two polylines (vertex to curve)."""
    return max(_directed_hausdorff(a, b, dims), _directed_hausdorff(b, a, dims))


def lateral_deviation(plan_a: Sequence[Polyline3], plan_b: Sequence[Polyline3]) -> float:
    """Largest x-y deviation between index-matched lanes of two plans."""
    if len(plan_a) != len(plan_b):
        raise MetricsError(
            "lane count mismatch between plans", count_a=len(plan_a), count_b=len(plan_b)
        )
    if len(plan_a) == 0:
        return 0.0
    return max(polyline_deviation(a, b, dims=2) for a, b in zip(plan_a, plan_b))


def _contains_many(contour: FieldContour, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Vectorised even-odd containment (no boundary tolerance; raster use)."""
    v = contour.vertices
    inside = np.zeros(px.shape, dtype=bool)
    j = len(v) - 1
    for i in range(len(v)):
        yi, yj = v[i, 1], v[j, 1]
        xi, xj = v[i, 0], v[j, 0]
        crosses = (yi > py) != (yj > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = xi + (py - yi) / (yj - yi) * (xj - xi)
        inside ^= crosses & (px < x_cross)
        j = i
    return inside


def _lane_roll_lookup(lane: PlannedLane, terrain: UniformGrid, probe: float):
    """Roll at an arbitrary station: converged roll if the plan has it,
    otherwise the as-driven cross-slope roll a rigid boom picks up from the
    terrain (the baseline plans flat but the machine still tilts)."""
    if lane.diagnostics:
        xy = np.array([p.position[:2] for p in lane.diagnostics])
        rolls = np.array([p.roll for p in lane.diagnostics])
        tree = cKDTree(xy)

        def lookup(p: np.ndarray, normal: np.ndarray) -> float:
            _, idx = tree.query(p[:2])
            return float(rolls[int(idx)])

        return lookup

    x0, y0, x1, y1 = terrain.bounds()

    def lookup(p: np.ndarray, normal: np.ndarray) -> float:
        ax = min(max(p[0] + probe * normal[0], x0), x1)
        ay = min(max(p[1] + probe * normal[1], y0), y1)
        bx = min(max(p[0] - probe * normal[0], x0), x1)
        by = min(max(p[1] - probe * normal[1], y0), y1)
        run = math.hypot(ax - bx, ay - by)
        if run == 0.0:
            return 0.0
        za, zb = eval_bilinear_many(terrain, np.array([ax, bx]), np.array([ay, by]))
        return math.atan((za - zb) / run)

    return lookup


def _swath_ring(lane: PlannedLane, terrain: UniformGrid, half_w: float, step: float) -> np.ndarray:
    """Map outline of the strip swept by the rolled boom along the lane.

    Left and right edges sit (w/2)*cos(roll) from the centerline; assumes
    the lane bends gently enough that the edges do not self-intersect,
    which the per-point heading-change cap guarantees for planned lanes.
    """
    lookup = _lane_roll_lookup(lane, terrain, probe=step)
    stations, headings = sample_with_heading(lane.line, step)
    left = np.empty((len(stations), 2))
    right = np.empty((len(stations), 2))
    for i, (p, psi) in enumerate(zip(stations, headings)):
        normal = np.array([-math.sin(psi), math.cos(psi)])
        half = half_w * math.cos(lookup(p, normal))
        left[i] = p[:2] + half * normal
        right[i] = p[:2] - half * normal
    return np.vstack([left, right[::-1]])


def coverage_counts(
    plan: Sequence[PlannedLane],
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    field: FieldContour,
    cell: float = 1.0,
) -> tuple[np.ndarray, np.ndarray, tuple[float, float]]:
    """Rasterised swath cover counts over the field bounding box.

    Each lane sweeps a map strip of half-width (w/2)*cos(roll) around its
    centerline; a cell counts as covered by the lane when the cell centre
    falls inside that strip, so exactly touching strips neither gap nor
    overlap. Returns (counts, inside_mask, (origin_x, origin_y)); cells
    are `cell` metres square with centres at origin + (i + 1/2) * cell.
    """
    if not (cell > 0) or cell > vehicle.working_width / 10.0:
        raise MetricsError(
            "raster cell must be positive and at most a tenth of the working width"
        )
    x0, y0, x1, y1 = field.bounds()
    nx = int(math.ceil((x1 - x0) / cell))
    ny = int(math.ceil((y1 - y0) / cell))
    cx = x0 + cell * (np.arange(nx) + 0.5)
    cy = y0 + cell * (np.arange(ny) + 0.5)
    gx, gy = np.meshgrid(cx, cy)
    inside = _contains_many(field, gx, gy)
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    counts = np.zeros(nx * ny, dtype=np.int32)
    half_w = 0.5 * vehicle.working_width
    for lane in plan:
        ring = _swath_ring(lane, terrain, half_w, cell / 2.0)
        counts += MplPath(ring).contains_points(centers).astype(np.int32)
    return counts.reshape(ny, nx), inside, (x0, y0)


def gap_overlap_raster(
    plan: Sequence[PlannedLane],
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    field: FieldContour,
    cell: float = 1.0,
) -> tuple[float, float]:
    """Fractions of the field raster covered zero times / more than once."""
    counts, inside, _ = coverage_counts(plan, terrain, vehicle, field, cell)
    total = int(inside.sum())
    if total == 0:
        raise MetricsError("field raster is empty at this cell size")
    gap = int(((counts == 0) & inside).sum()) / total
    overlap = int(((counts >= 2) & inside).sum()) / total
    return gap, overlap


def _lane_stats(lane: PlannedLane) -> LaneStats:
    if lane.diagnostics:
        rolls = [abs(p.roll) for p in lane.diagnostics]
        heights = [p.achieved_height for p in lane.diagnostics]
        converged = sum(1 for p in lane.diagnostics if p.converged)
        return LaneStats(
            lane_id=lane.lane_id,
            kind=lane.kind,
            n_points=len(lane.line),
            max_abs_roll=max(rolls),
            h_proj_min=min(heights),
            h_proj_max=max(heights),
            converged_fraction=converged / len(lane.diagnostics),
            excessive_roll=lane.excessive_roll,
        )
    return LaneStats(
        lane_id=lane.lane_id,
        kind=lane.kind,
        n_points=len(lane.line),
        max_abs_roll=0.0,
        h_proj_min=None,
        h_proj_max=None,
        converged_fraction=None,
        excessive_roll=False,
    )


def _pair_stats(
    a: PlannedLane,
    b: PlannedLane,
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    sample_step: float,
) -> tuple[LanePairStats, np.ndarray]:
    spacing = ground_spacing_profile(a.line, b.line, terrain, vehicle, sample_step)
    implied = 0.0
    stations, headings = sample_with_heading(a.line, sample_step)
    for p, psi in zip(stations, headings):
        along = np.array([math.cos(psi), math.sin(psi)])
        q = _cross_section_point(b.line, p[:2], along)
        if q is None:
            continue
        run = math.hypot(q[0] - p[0], q[1] - p[1])
        if run > 0:
            implied = max(implied, abs(math.atan((q[2] - p[2]) / run)))
    if len(spacing) == 0:
        stats = LanePairStats(a.lane_id, b.lane_id, 0, 0.0, 0.0, 0.0, 0.0, 0.0, implied)
        return stats, spacing
    err = np.abs(spacing - vehicle.working_width)
    stats = LanePairStats(
        lane_a=a.lane_id,
        lane_b=b.lane_id,
        n_samples=len(spacing),
        mean_spacing=float(spacing.mean()),
        min_spacing=float(spacing.min()),
        max_spacing=float(spacing.max()),
        mean_abs_error=float(err.mean()),
        max_abs_error=float(err.max()),
        implied_roll_max=implied,
    )
    return stats, spacing


def coverage_report(
    plan: Sequence[PlannedLane],
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    field: FieldContour,
    cell: float = 1.0,
    sample_step: float = 5.0,
    other_plan: Sequence[PlannedLane] | None = None,
) -> tuple[CoverageReport, list[np.ndarray]]:
    """Full quality report for one plan plus per-pair spacing profiles."""
    mainfield_lanes = [l for l in plan if l.kind != "headland"]
    lanes = [_lane_stats(l) for l in mainfield_lanes]
    pairs = []
    profiles: list[np.ndarray] = []
    for a, b in zip(mainfield_lanes[:-1], mainfield_lanes[1:]):
        stats, profile = _pair_stats(a, b, terrain, vehicle, sample_step)
        pairs.append(stats)
        profiles.append(profile)
    gap, overlap = gap_overlap_raster(mainfield_lanes, terrain, vehicle, field, cell)
    deviation = None
    if other_plan is not None:
        deviation = lateral_deviation(
            [l.line for l in mainfield_lanes],
            [l.line for l in other_plan if l.kind != "headland"],
        )
    report = CoverageReport(
        lanes=lanes,
        pairs=pairs,
        gap_fraction=gap,
        overlap_fraction=overlap,
        max_lateral_deviation=deviation,
    )
    return report, profiles
