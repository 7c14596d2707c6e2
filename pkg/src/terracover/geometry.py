"""Field contour handling: containment, inward offsets, lane clipping.

The contour is a simple polygon in the x-y plane. Containment and clipping
are exact enough to carry interpolated z along lane cuts; inward offsetting
leans on shapely's buffer with mitred corners because robust polygon
offsetting is not worth reinventing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient

from .errors import GeometryError, OutsideTerrainExtent
from .lines import Polyline3, dedupe_consecutive
from .terrain import UniformGrid, eval_bilinear

# Corner treatment for inward offsets: mitred with this limit, so sharp
# non-convex corners fall back to a bevel instead of spiking.
MITER_LIMIT = 4.0

_BOUNDARY_TOL = 1e-9  # metres; points this close to an edge count as inside


@dataclass
class FieldContour:
    """Simple polygon boundary, counter-clockwise, closing vertex implicit."""

    vertices: np.ndarray  # shape (n, 2)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise GeometryError("contour vertices must have shape (n, 2)")
        if v.shape[0] >= 2 and np.allclose(v[0], v[-1]):
            v = v[:-1]
        if v.shape[0] < 3:
            raise GeometryError("contour needs at least 3 distinct vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("contour contains non-finite coordinates")
        area2 = _signed_area2(v)
        if abs(area2) < 1e-12:
            raise GeometryError("contour encloses no area")
        if area2 < 0:
            v = v[::-1].copy()
        if not Polygon(v).is_valid:
            raise GeometryError("contour is not a simple polygon")
        self.vertices = v

    @property
    def area(self) -> float:
        return 0.5 * _signed_area2(self.vertices)

    def bounds(self) -> tuple[float, float, float, float]:
        return (
            float(self.vertices[:, 0].min()),
            float(self.vertices[:, 1].min()),
            float(self.vertices[:, 0].max()),
            float(self.vertices[:, 1].max()),
        )

    def edges(self):
        v = self.vertices
        for i in range(len(v)):
            yield v[i], v[(i + 1) % len(v)]


@dataclass(frozen=True)
class HeadlandSpec:
    """Headland: passes concentric rings, each pass_width wide."""

    passes: int = 0
    pass_width: float = 0.0

    def __post_init__(self):
        if self.passes < 0:
            raise GeometryError("headland passes must be non-negative")
        if self.passes > 0 and not (self.pass_width > 0):
            raise GeometryError("headland pass width must be positive")


def _signed_area2(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _point_segment_dist2d(px, py, ax, ay, bx, by) -> float:
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    seg2 = vx * vx + vy * vy
    t = 0.0 if seg2 == 0.0 else max(0.0, min(1.0, (wx * vx + wy * vy) / seg2))
    dx, dy = wx - t * vx, wy - t * vy
    return math.hypot(dx, dy)


def boundary_distance(contour: FieldContour, point: Sequence[float]) -> float:
    """Distance from the point to the nearest contour edge."""
    px, py = float(point[0]), float(point[1])
    return min(
        _point_segment_dist2d(px, py, a[0], a[1], b[0], b[1])
        for a, b in contour.edges()
    )


def contains(contour: FieldContour, point: Sequence[float]) -> bool:
    """Even-odd point-in-polygon; points on the boundary count as inside."""
    px, py = float(point[0]), float(point[1])
    v = contour.vertices
    n = len(v)
    if boundary_distance(contour, point) <= _BOUNDARY_TOL:
        return True
    inside = False
    j = n - 1
    for i in range(n):
        yi, yj = v[i, 1], v[j, 1]
        if (yi > py) != (yj > py):
            x_cross = v[i, 0] + (py - yi) / (yj - yi) * (v[j, 0] - v[i, 0])
            if px < x_cross:
                inside = not inside
        j = i
    return inside


def inward_offset(contour: FieldContour, distance: float) -> FieldContour:
    """Contour shrunk inward by distance with mitred corners.

    Raises if the offset erases the polygon or splits it into pieces
    (multi-part fields are out of scope).
    """
    if distance < 0:
        raise GeometryError("offset distance must be non-negative")
    if distance == 0:
        return contour
    poly = Polygon(contour.vertices)
    off = poly.buffer(-distance, join_style="mitre", mitre_limit=MITER_LIMIT)
    if off.is_empty:
        raise GeometryError("offset exceeds inradius", distance=float(distance))
    if off.geom_type == "MultiPolygon":
        raise GeometryError("offset splits contour", distance=float(distance))
    if off.geom_type != "Polygon":
        raise GeometryError("offset produced no polygon", distance=float(distance))
    ring = orient(off, sign=1.0).exterior
    coords = np.array(ring.coords[:-1], dtype=float)
    return FieldContour(coords)


def _segment_crossings(p: np.ndarray, q: np.ndarray, contour: FieldContour) -> list[float]:
    """Parameters t in (0, 1) where segment p->q crosses a contour edge."""
    ts: list[float] = []
    rx, ry = q[0] - p[0], q[1] - p[1]
    for a, b in contour.edges():
        sx, sy = b[0] - a[0], b[1] - a[1]
        denom = rx * sy - ry * sx
        if denom == 0.0:
            continue  # parallel or collinear; interval midpoints classify these
        dx, dy = a[0] - p[0], a[1] - p[1]
        t = (dx * sy - dy * sx) / denom
        u = (dx * ry - dy * rx) / denom
        if 0.0 < t < 1.0 and -1e-12 <= u <= 1.0 + 1e-12:
            ts.append(float(t))
    return sorted(set(ts))


def clip_lane(lane: Polyline3, contour: FieldContour) -> list[Polyline3]:
    """Pieces of the lane inside the contour, z interpolated at the cuts."""
    pieces: list[list[np.ndarray]] = []
    current: list[np.ndarray] = []

    def flush():
        nonlocal current
        if len(current) >= 2:
            pts = dedupe_consecutive(current, tol=1e-12)
            if len(pts) >= 2:
                pieces.append(pts)
        current = []

    pts = lane.points
    for i in range(len(pts) - 1):
        p, q = pts[i], pts[i + 1]
        breaks = [0.0] + _segment_crossings(p, q, contour) + [1.0]
        for t0, t1 in zip(breaks[:-1], breaks[1:]):
            if t1 - t0 <= 1e-12:
                continue
            tm = 0.5 * (t0 + t1)
            mid = p + tm * (q - p)
            if contains(contour, mid[:2]):
                a = p + t0 * (q - p)
                b = p + t1 * (q - p)
                if current and np.hypot(a[0] - current[-1][0], a[1] - current[-1][1]) <= 1e-9:
                    current.append(b)
                else:
                    flush()
                    current = [a, b]
            else:
                flush()
    flush()

    out = []
    for piece in pieces:
        arr = np.array(piece)
        if float(np.hypot(*(arr[-1, :2] - arr[0, :2]))) > 1e-9 or len(arr) > 2:
            out.append(Polyline3(arr))
    return out


def project_vertical(
    path_xy: Sequence[Sequence[float]], terrain: UniformGrid, lift: float = 0.0
) -> Polyline3:
    """Drop a 2-D path onto the terrain, raised vertically by lift."""
    pts = []
    for i, p in enumerate(path_xy):
        x, y = float(p[0]), float(p[1])
        try:
            z = eval_bilinear(terrain, x, y)
        except OutsideTerrainExtent as exc:
            exc.details["index"] = i
            raise
        pts.append(np.array([x, y, z + lift]))
    return Polyline3(np.array(dedupe_consecutive(pts, tol=0.0)))


def _ray_boundary_hit(
    origin: np.ndarray, direction: np.ndarray, contour: FieldContour
) -> float | None:
    """Smallest positive ray parameter hitting a contour edge, if any."""
    best = None
    rx, ry = direction
    for a, b in contour.edges():
        sx, sy = b[0] - a[0], b[1] - a[1]
        denom = rx * sy - ry * sx
        if denom == 0.0:
            continue
        dx, dy = a[0] - origin[0], a[1] - origin[1]
        t = (dx * sy - dy * sx) / denom
        u = (dx * ry - dy * rx) / denom
        if t > 1e-9 and -1e-12 <= u <= 1.0 + 1e-12:
            if best is None or t < best:
                best = float(t)
    return best


def extend_to_boundary(lane: Polyline3, contour: FieldContour) -> Polyline3:
    """Prolong the lane's end segments until they meet the contour.

    Midpoint-based adjacent lanes are a touch shorter than their reference;
    left alone that erosion compounds every cascade step and the far field
    corners never get covered. Extension is linear along the end headings
    (z continued at the end segment's grade) and only applies when the
    endpoint is inside the contour.
    """
    pts = [p.copy() for p in lane.points]
    x0, y0, x1, y1 = contour.bounds()
    max_reach = 2.0 * math.hypot(x1 - x0, y1 - y0)

    def extension(end: np.ndarray, inner: np.ndarray) -> np.ndarray | None:
        run = math.hypot(end[0] - inner[0], end[1] - inner[1])
        if run == 0.0 or not contains(contour, end[:2]):
            return None
        if boundary_distance(contour, end[:2]) <= 1e-6:
            return None  # already at the boundary; a ray would cross outside
        ex = (end[0] - inner[0]) / run
        ey = (end[1] - inner[1]) / run
        grade = (end[2] - inner[2]) / run
        t = _ray_boundary_hit(end[:2], (ex, ey), contour)
        if t is None or t > max_reach or t <= 1e-9:
            return None
        return np.array([end[0] + t * ex, end[1] + t * ey, end[2] + t * grade])

    head = extension(pts[0], pts[1])
    tail = extension(pts[-1], pts[-2])
    if head is not None:
        pts.insert(0, head)
    if tail is not None:
        pts.append(tail)
    return Polyline3(np.array(pts))


def seed_chord(
    contour: FieldContour,
    inset: float,
    edge_index: int | None = None,
    clip_to: FieldContour | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """2-D chord of the contour parallel to an edge, inset metres inward.

    edge_index picks the contour edge to align with; by default the longest
    edge is used (lowest index on ties). The chord is clipped to clip_to
    when given (e.g. the mainfield boundary inside a headland), otherwise to
    the contour itself. Returns the endpoints ordered along the edge.
    """
    clip_contour = contour if clip_to is None else clip_to
    v = contour.vertices
    n = len(v)
    if edge_index is None:
        lengths = [math.hypot(*(v[(i + 1) % n] - v[i])) for i in range(n)]
        edge_index = int(np.argmax(lengths))
    if not (0 <= edge_index < n):
        raise GeometryError("edge index out of range", edge_index=edge_index)
    a = v[edge_index]
    b = v[(edge_index + 1) % n]
    length = math.hypot(*(b - a))
    if length == 0.0:
        raise GeometryError("degenerate contour edge", edge_index=edge_index)
    u = (b - a) / length
    inward = np.array([-u[1], u[0]])  # CCW polygon: interior is left of the edge
    center = 0.5 * (a + b) + inset * inward
    x0, y0, x1, y1 = contour.bounds()
    reach = 2.0 * math.hypot(x1 - x0, y1 - y0)
    line = Polyline3(
        np.array(
            [
                [center[0] - reach * u[0], center[1] - reach * u[1], 0.0],
                [center[0] + reach * u[0], center[1] + reach * u[1], 0.0],
            ]
        )
    )
    pieces = clip_lane(line, clip_contour)
    if not pieces:
        raise GeometryError("seed line misses field", inset=float(inset))
    best = max(pieces, key=lambda p: p.length(2))
    p0 = best.points[0, :2].copy()
    p1 = best.points[-1, :2].copy()
    if np.dot(p1 - p0, u) < 0:
        p0, p1 = p1, p0
    return p0, p1


def headland_rings(contour: FieldContour, spec: HeadlandSpec) -> list[np.ndarray]:
    """Centre paths of the headland passes, outermost first, closed rings."""
    rings = []
    for j in range(spec.passes):
        ring = inward_offset(contour, (j + 0.5) * spec.pass_width)
        closed = np.vstack([ring.vertices, ring.vertices[:1]])
        rings.append(closed)
    return rings


def mainfield_boundary(contour: FieldContour, spec: HeadlandSpec) -> FieldContour:
    """Interior boundary left for mainfield lanes once headland passes are cut."""
    if spec.passes == 0:
        return contour
    return inward_offset(contour, spec.passes * spec.pass_width)
