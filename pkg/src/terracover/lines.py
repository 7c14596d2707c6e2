"""3-D polyline container and arc-length helpers shared by the planner and metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class Polyline3:
    """Ordered 3-D vertices; consecutive vertices must be distinct in x-y."""

    points: np.ndarray  # shape (n, 3)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValidationError("polyline points must have shape (n, 3)")
        if pts.shape[0] < 2:
            raise ValidationError("polyline needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("polyline contains non-finite coordinates")
        seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        if np.any(seg == 0.0):
            raise ValidationError("polyline has coincident consecutive x-y vertices")
        self.points = pts

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    def segment_lengths(self, dims: int = 3) -> np.ndarray:
        d = np.diff(self.points[:, :dims], axis=0)
        return np.sqrt((d * d).sum(axis=1))

    def length(self, dims: int = 3) -> float:
        return float(self.segment_lengths(dims).sum())

    def headings(self) -> np.ndarray:
        """Per-segment x-y headings via the two-argument arctangent."""
        d = np.diff(self.points[:, :2], axis=0)
        return np.arctan2(d[:, 1], d[:, 0])


def dedupe_consecutive(points: list[np.ndarray], tol: float = 0.0) -> list[np.ndarray]:
    """Drop points that repeat the previous x-y position (within tol)."""
    out: list[np.ndarray] = []
    for p in points:
        if out and float(np.hypot(p[0] - out[-1][0], p[1] - out[-1][1])) <= tol:
            continue
        out.append(np.asarray(p, dtype=float))
    return out


def point_at_arc(line: Polyline3, s: float, dims: int = 3) -> np.ndarray:
    """Point at arc-length position s, measured over the first dims coordinates."""
    seg = line.segment_lengths(dims)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if s <= 0.0:
        return line.points[0].copy()
    if s >= total:
        return line.points[-1].copy()
    i = int(np.searchsorted(cum, s, side="right") - 1)
    i = min(i, len(seg) - 1)
    frac = (s - cum[i]) / seg[i]
    return line.points[i] + frac * (line.points[i + 1] - line.points[i])


def resample_by_count(line: Polyline3, n_segments: int, dims: int = 3) -> Polyline3:
    """Resample to n_segments equal arc-length pieces, endpoints preserved."""
    if n_segments < 1:
        raise ValidationError("n_segments must be at least 1")
    total = line.length(dims)
    spacing = total / n_segments
    pts = [line.points[0].copy()]
    for i in range(1, n_segments):
        pts.append(point_at_arc(line, i * spacing, dims))
    pts.append(line.points[-1].copy())
    return Polyline3(np.array(dedupe_consecutive(pts, tol=0.0)))


def sample_with_heading(line: Polyline3, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Points every step metres of x-y arc plus the local segment heading.

    Returns (points (m, 3), headings (m,)). The final vertex is always
    included so short tails are not lost.
    """
    if not (step > 0):
        raise ValidationError("sample step must be positive")
    seg = line.segment_lengths(2)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    svals = np.arange(0.0, total, step)
    svals = np.append(svals, total)
    heads = line.headings()
    pts = np.empty((len(svals), 3))
    hs = np.empty(len(svals))
    for j, s in enumerate(svals):
        pts[j] = point_at_arc(line, float(s), dims=2)
        i = int(np.searchsorted(cum, s, side="right") - 1)
        hs[j] = heads[min(i, len(heads) - 1)]
    return pts, hs
