"""Terrain-following lane construction.

Lanes are generated one from another: every segment of the reference lane
contributes one point of the adjacent lane, found by tilting a rigid offset
arm of length equal to the working width until the new point floats at the
boom height above the terrain. The tilt (roll) search is a fixed-step walk
refined by an inverse-error blend of the last two iterates once the target
height is bracketed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GeometryError, LaneExitsExtent, OutsideTerrainExtent, ValidationError
from .geometry import FieldContour, clip_lane, contains, extend_to_boundary
from .lines import Polyline3, resample_by_count
from .terrain import UniformGrid, eval_bilinear, eval_bilinear_many


@dataclass(frozen=True)
class VehicleConfig:
    """Geometry of the machine: boom width, float height, axle half-width."""

    working_width: float  # w, full boom span in metres
    boom_height: float  # h, target projection distance above terrain
    axle_half_width: float = 1.5  # a, lateral probe distance for ground tilt
    max_roll: float = math.radians(30.0)  # |roll| beyond this flags the lane

    def __post_init__(self):
        if not (self.working_width > 0):
            raise ValidationError("working width must be positive")
        if not (self.boom_height > 0):
            raise ValidationError("boom height must be positive")
        if not (self.axle_half_width > 0):
            raise ValidationError("axle half-width must be positive")
        if not (0 < self.max_roll < math.pi / 2):
            raise ValidationError("max roll must lie in (0, pi/2)")


@dataclass(frozen=True)
class SolverConfig:
    """Roll search controls and lane spacing parameters."""

    tolerance: float = 0.1  # metres of height error accepted as converged
    roll_step: float = math.radians(1.0)  # fixed walk step
    max_iterations: int | None = None  # None derives a cap from max_roll
    offset_side: str = "left"  # which side of the heading new lanes go
    max_heading_change: float = math.radians(30.0)  # caps per-point turn
    record_history: bool = False  # keep (roll, height) iterates on results

    def __post_init__(self):
        if not (self.tolerance > 0):
            raise ValidationError("tolerance must be positive")
        if not (self.roll_step > 0):
            raise ValidationError("roll step must be positive")
        if self.offset_side not in ("left", "right"):
            raise ValidationError("offset side must be 'left' or 'right'")
        if not (0 < self.max_heading_change <= math.pi / 2):
            raise ValidationError("max heading change must lie in (0, pi/2]")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValidationError("iteration cap must be at least 1")

    def iteration_cap(self, vehicle: VehicleConfig) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        # Enough steps to sweep the whole admissible roll range and then some.
        return math.ceil(2.0 * vehicle.max_roll / self.roll_step) + 10


@dataclass
class SegmentFrame:
    """Local frame of one reference segment: heading, midpoint, lifted point."""

    heading: float  # x-y heading of the segment
    midpoint: np.ndarray  # (3,) segment midpoint
    lifted: np.ndarray  # (3,) point floated at boom height over the terrain
    ground_tilt: float  # lateral ground angle at the midpoint (0 if not probed)
    lateral: np.ndarray  # (2,) unit vector toward the new lane


@dataclass
class Candidate:
    """One evaluation of the offset arm at a given roll."""

    position: np.ndarray  # (3,)
    roll: float
    w_hat: float  # horizontal reach of the rolled arm
    d_vert: float  # vertical clearance over the terrain (signed)
    h_proj: float  # approximate projection distance |d_vert * cos(roll)|


@dataclass
class LanePointResult:
    """Converged (or best-effort) adjacent lane point with diagnostics."""

    position: np.ndarray  # (3,)
    roll: float
    effective_offset: float  # w_hat at the final roll
    achieved_height: float  # h_proj at the final roll
    iterations: int
    converged: bool
    excessive_roll: bool = False
    lifted: np.ndarray | None = None
    history: list[tuple[float, float]] | None = None  # (roll, h_proj) iterates


@dataclass
class AdjacentLaneResult:
    """One cascade step: the new lane plus per-point diagnostics."""

    line: Polyline3 | None
    points: list[LanePointResult]
    skipped: list[int]  # reference segment indices that left the terrain
    excessive_roll: bool
    exited_extent: bool


@dataclass
class CascadedLane:
    """A finished mainfield lane: clipped, resampled, ready as next reference."""

    line: Polyline3
    diagnostics: list[LanePointResult]
    skipped: list[int]
    excessive_roll: bool
    exited_extent: bool


def _lateral_unit(heading: float, offset_side: str) -> np.ndarray:
    side = 0.5 * math.pi if offset_side == "left" else -0.5 * math.pi
    return np.array([math.cos(heading + side), math.sin(heading + side)])


def segment_frame(
    p0: Sequence[float],
    p1: Sequence[float],
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    solver: SolverConfig,
) -> SegmentFrame:
    """Heading, midpoint and lifted point for one reference segment.

    If the segment midpoint already floats at the boom height (within the
    solver tolerance, measured vertically) it is used as the lifted point
    directly. Otherwise the ground tilt is probed one axle half-width to
    the side and the midpoint is re-lifted normal to that tilt.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    if math.hypot(dx, dy) == 0.0:
        raise ValidationError("degenerate reference segment (zero x-y length)")
    heading = math.atan2(dy, dx)
    lateral = _lateral_unit(heading, solver.offset_side)
    mid = 0.5 * (p0 + p1)
    ground_mid = eval_bilinear(terrain, mid[0], mid[1])
    h = vehicle.boom_height
    if abs((mid[2] - ground_mid) - h) <= solver.tolerance:
        return SegmentFrame(heading, mid, mid.copy(), 0.0, lateral)
    a = vehicle.axle_half_width
    probe_x = mid[0] + a * lateral[0]
    probe_y = mid[1] + a * lateral[1]
    ground_probe = eval_bilinear(terrain, probe_x, probe_y)
    tilt = math.atan((ground_mid - ground_probe) / a)
    lifted = np.array(
        [
            mid[0] + h * math.sin(tilt) * lateral[0],
            mid[1] + h * math.sin(tilt) * lateral[1],
            ground_mid + h * math.cos(tilt),
        ]
    )
    return SegmentFrame(heading, mid, lifted, tilt, lateral)


def initial_roll(
    frame: SegmentFrame, terrain: UniformGrid, vehicle: VehicleConfig
) -> float:
    """First roll guess from the terrain drop across the full working width."""
    w = vehicle.working_width
    probe_x = frame.lifted[0] + w * frame.lateral[0]
    probe_y = frame.lifted[1] + w * frame.lateral[1]
    try:
        ground_w = eval_bilinear(terrain, probe_x, probe_y)
    except OutsideTerrainExtent as exc:
        raise LaneExitsExtent("lane exits terrain extent", x=float(probe_x), y=float(probe_y)) from exc
    return math.atan((frame.lifted[2] - ground_w - vehicle.boom_height) / w)


def candidate_offset(
    frame: SegmentFrame, roll: float, terrain: UniformGrid, vehicle: VehicleConfig
) -> Candidate:
    """Evaluate the rolled offset arm: position plus height diagnostics."""
    w = vehicle.working_width
    w_hat = w * math.cos(roll)
    x = frame.lifted[0] + w_hat * frame.lateral[0]
    y = frame.lifted[1] + w_hat * frame.lateral[1]
    z = frame.lifted[2] - w * math.sin(roll)
    try:
        ground = eval_bilinear(terrain, x, y)
    except OutsideTerrainExtent as exc:
        raise LaneExitsExtent("lane exits terrain extent", x=float(x), y=float(y)) from exc
    d_vert = z - ground
    h_proj = abs(d_vert * math.cos(roll))
    return Candidate(np.array([x, y, z]), roll, w_hat, d_vert, h_proj)


def blend_roll(
    roll_prev: float,
    height_prev: float,
    roll_curr: float,
    height_curr: float,
    target_height: float,
) -> float:
    """Inverse-error weighted roll between two iterates bracketing the target."""
    err_prev = abs(height_prev - target_height)
    err_curr = abs(height_curr - target_height)
    if err_curr == 0.0:
        return roll_curr
    if err_prev == 0.0:
        return roll_prev
    eta_prev = 1.0 / err_prev
    eta_curr = 1.0 / err_curr
    return (eta_curr * roll_curr + eta_prev * roll_prev) / (eta_curr + eta_prev)


def refine_roll(
    frame: SegmentFrame,
    roll0: float,
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    solver: SolverConfig,
) -> LanePointResult:
    """Walk the roll in fixed steps until the point floats at boom height.

    Steps move the arm toward the terrain while the projected height is
    above target and away from it while below. When the height error flips
    sign between consecutive iterates the two rolls are blended with
    inverse-error weights, the arm is evaluated once more at the blend and
    that result is returned; the converged flag reflects its final error.
    If the error stops decreasing without a sign flip (rough ground), the
    best iterate so far is returned unconverged.
    """
    h = vehicle.boom_height
    tol = solver.tolerance
    history: list[tuple[float, float]] | None = [] if solver.record_history else None

    def finish(cand: Candidate, iterations: int, converged: bool) -> LanePointResult:
        return LanePointResult(
            position=cand.position,
            roll=cand.roll,
            effective_offset=cand.w_hat,
            achieved_height=cand.h_proj,
            iterations=iterations,
            converged=converged,
            excessive_roll=abs(cand.roll) > vehicle.max_roll,
            lifted=frame.lifted.copy(),
            history=history,
        )

    cand = candidate_offset(frame, roll0, terrain, vehicle)
    if history is not None:
        history.append((cand.roll, cand.h_proj))
    err = abs(cand.h_proj - h)
    if err <= tol:
        return finish(cand, 0, True)

    best_err, best_cand = err, cand
    prev = cand
    prev_err = err
    iterations = 0
    cap = solver.iteration_cap(vehicle)
    while iterations < cap:
        iterations += 1
        if prev.h_proj < h:
            roll = prev.roll - solver.roll_step
        else:
            roll = prev.roll + solver.roll_step
        cand = candidate_offset(frame, roll, terrain, vehicle)
        if history is not None:
            history.append((cand.roll, cand.h_proj))
        err = abs(cand.h_proj - h)
        if err <= tol:
            return finish(cand, iterations, True)
        if (cand.h_proj - h) * (prev.h_proj - h) < 0.0:
            blended = blend_roll(prev.roll, prev.h_proj, cand.roll, cand.h_proj, h)
            cand = candidate_offset(frame, blended, terrain, vehicle)
            iterations += 1
            if history is not None:
                history.append((cand.roll, cand.h_proj))
            return finish(cand, iterations, abs(cand.h_proj - h) <= tol)
        if err >= prev_err:
            return finish(best_cand, iterations, False)
        if err < best_err:
            best_err, best_cand = err, cand
        prev, prev_err = cand, err
    return finish(best_cand, iterations, False)


def exact_projection_distance(
    point: Sequence[float], terrain: UniformGrid, search_radius: float, step: float
) -> float:
    """True shortest 3-D distance from the point to the terrain surface.

    Found by scanning a square window of the surface around the point at
    the given step; independent of the planner's cos-projected estimate, so
    it serves as its oracle. The window must stay inside the terrain bounds.
    """
    _, dist = nearest_surface_point(point, terrain, search_radius, step, clamp=False)
    return dist


def nearest_surface_point(
    point: Sequence[float],
    terrain: UniformGrid,
    search_radius: float,
    step: float,
    clamp: bool = False,
) -> tuple[np.ndarray, float]:
    """Closest terrain surface point within a square search window.

    With clamp=True the window is cut back to the terrain bounds instead of
    raising; useful for metric sampling near the field edge.
    """
    if not (search_radius > 0 and step > 0):
        raise ValidationError("search radius and step must be positive")
    px, py, pz = float(point[0]), float(point[1]), float(point[2])
    n = int(math.ceil(search_radius / step))
    offsets = step * np.arange(-n, n + 1)
    xs = px + offsets
    ys = py + offsets
    x0, y0, x1, y1 = terrain.bounds()
    if clamp:
        xs = xs[(xs >= x0) & (xs <= x1)]
        ys = ys[(ys >= y0) & (ys <= y1)]
        if len(xs) == 0 or len(ys) == 0:
            raise OutsideTerrainExtent("query outside terrain extent", x=px, y=py)
    elif xs[0] < x0 or xs[-1] > x1 or ys[0] < y0 or ys[-1] > y1:
        raise OutsideTerrainExtent(
            "search window exits terrain extent", x=px, y=py, radius=float(search_radius)
        )
    gx, gy = np.meshgrid(xs, ys)
    gz = eval_bilinear_many(terrain, gx, gy)
    d2 = (gx - px) ** 2 + (gy - py) ** 2 + (gz - pz) ** 2
    flat = int(np.argmin(d2))
    j, i = np.unravel_index(flat, d2.shape)
    foot = np.array([gx[j, i], gy[j, i], gz[j, i]])
    return foot, float(math.sqrt(d2[j, i]))


def adjacent_lane(
    reference: Polyline3,
    terrain: UniformGrid,
    vehicle: VehicleConfig,
    solver: SolverConfig,
) -> AdjacentLaneResult:
    """One lane offset from the reference: one point per reference segment.

    Reference segments whose probes or candidates leave the terrain extent
    are skipped and recorded; the lane is marked rather than aborted. The
    final reference point contributes no midpoint, so an n-point reference
    yields at most n-1 lane points.
    """
    points: list[LanePointResult] = []
    positions: list[np.ndarray] = []
    skipped: list[int] = []
    for i in range(len(reference) - 1):
        p0 = reference.points[i]
        p1 = reference.points[i + 1]
        try:
            frame = segment_frame(p0, p1, terrain, vehicle, solver)
            roll0 = initial_roll(frame, terrain, vehicle)
            result = refine_roll(frame, roll0, terrain, vehicle, solver)
        except (OutsideTerrainExtent, LaneExitsExtent):
            skipped.append(i)
            continue
        if positions and math.hypot(
            result.position[0] - positions[-1][0], result.position[1] - positions[-1][1]
        ) == 0.0:
            skipped.append(i)  # coincident with the previous point; drop
            continue
        points.append(result)
        positions.append(result.position)
    line = Polyline3(np.array(positions)) if len(positions) >= 2 else None
    return AdjacentLaneResult(
        line=line,
        points=points,
        skipped=skipped,
        excessive_roll=any(p.excessive_roll for p in points),
        exited_extent=len(skipped) > 0,
    )


def min_tangential_spacing(working_width: float, max_heading_change: float) -> float:
    """Smallest reference point spacing that keeps per-point turns bounded.

    Equals working_width * (1 - cos(d)) / sin(d); evaluated via the
    half-angle identity, which is exact and finite as d approaches 0.
    """
    if not (working_width > 0):
        raise ValidationError("working width must be positive")
    if not (0 <= max_heading_change < math.pi):
        raise ValidationError("max heading change must lie in [0, pi)")
    return working_width * math.tan(0.5 * max_heading_change)


def resample_reference(
    line: Polyline3, vehicle: VehicleConfig, solver: SolverConfig
) -> Polyline3:
    """Resample to uniform 3-D arc spacing at or above the minimum spacing.

    Endpoints are preserved; every interior point moves onto an equal
    arc-length subdivision. Applied to each cascaded lane before it becomes
    the next reference so the point count does not decay step by step.
    """
    d_min = min_tangential_spacing(vehicle.working_width, solver.max_heading_change)
    if d_min <= 0:
        raise ValidationError("minimum spacing must be positive for resampling")
    total = line.length(3)
    n_segments = max(1, int(math.floor(total / d_min)))
    return resample_by_count(line, n_segments, dims=3)


def cascade_lanes(
    seed: Polyline3,
    terrain: UniformGrid,
    field_boundary: FieldContour,
    vehicle: VehicleConfig,
    solver: SolverConfig,
    max_lanes: int = 500,
) -> list[CascadedLane]:
    """Generate adjacent lanes from the seed until they leave the field.

    Each produced lane is extended to the field boundary, clipped to it,
    resampled to the reference spacing and then used as the next reference.
    Stops when a lane falls entirely outside the boundary, produces too few
    points, or max_lanes is reached. The seed itself is not returned.
    """
    if max_lanes < 1:
        raise ValidationError("max_lanes must be at least 1")
    for i, p in enumerate(seed.points):
        if not contains(field_boundary, p[:2]):
            raise GeometryError("seed outside field", index=i)
    lanes: list[CascadedLane] = []
    reference = seed
    for _ in range(max_lanes):
        adj = adjacent_lane(reference, terrain, vehicle, solver)
        if adj.line is None:
            break
        extended = extend_to_boundary(adj.line, field_boundary)
        pieces = clip_lane(extended, field_boundary)
        if not pieces:
            break
        piece = max(pieces, key=lambda p: p.length(2))
        lane_line = resample_reference(piece, vehicle, solver)
        lanes.append(
            CascadedLane(
                line=lane_line,
                diagnostics=adj.points,
                skipped=adj.skipped,
                excessive_roll=adj.excessive_roll,
                exited_extent=adj.exited_extent,
            )
        )
        reference = lane_line
    return lanes
