"""Terrain model built from scattered elevation samples.

Scattered (x, y, z) field samples are gridded onto a uniform lattice by
inverse-distance weighting over the nearest few samples, and the lattice is
queried through bilinear interpolation. The grid is the only terrain
representation the lane planner sees, so everything here is deterministic:
nearest-neighbour ties are broken by sample ingestion order and evaluation
never extrapolates outside the lattice bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import OutsideTerrainExtent, TerrainDataError


@dataclass(frozen=True)
class SamplePoint:
    """One scattered elevation sample, coordinates in metres."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class GridBuildParams:
    """Controls for gridding scattered samples onto the uniform lattice.

    Attributes:
        grid_spacing: lattice node spacing in metres.
        idw_extra_neighbors: how many neighbours beyond the nearest one take
            part in the weighting; the total neighbour count is this plus 1.
    """

    grid_spacing: float = 1.0
    idw_extra_neighbors: int = 3

    def __post_init__(self):
        if not (self.grid_spacing > 0):
            raise TerrainDataError("grid spacing must be positive")
        if self.idw_extra_neighbors < 0:
            raise TerrainDataError("neighbor count must be non-negative")

    @property
    def idw_neighbors(self) -> int:
        return self.idw_extra_neighbors + 1


class SpatialIndex:
    """k-nearest lookup over the sample cloud (x-y plane only).

    Backed by a kd-tree but with a deterministic contract: results are
    always ordered by (distance, ingestion index), and ties at the k-th
    distance are resolved in favour of earlier samples. Distances are
    recomputed from coordinates so they match a plain full-scan exactly.
    """

    def __init__(self, samples: Sequence[SamplePoint]):
        if len(samples) == 0:
            raise TerrainDataError("no terrain data")
        self.samples = list(samples)
        self._xy = np.array([[s.x, s.y] for s in self.samples], dtype=float)
        self._z = np.array([s.z for s in self.samples], dtype=float)
        self._tree = cKDTree(self._xy)

    def __len__(self) -> int:
        return len(self.samples)

    def _order_subset(self, idx: np.ndarray, qx: float, qy: float) -> tuple[np.ndarray, np.ndarray]:
        """Order candidate indices by (recomputed distance, index)."""
        d = np.hypot(self._xy[idx, 0] - qx, self._xy[idx, 1] - qy)
        order = np.lexsort((idx, d))
        return idx[order], d[order]

    def query(self, qx: float, qy: float, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (indices, distances) of the k nearest samples to (qx, qy)."""
        n = len(self.samples)
        if k < 1:
            raise TerrainDataError("neighbor count must be at least 1")
        if k > n:
            raise TerrainDataError("fewer samples than idw_neighbors", have=n, need=k)
        if k == n:
            idx, d = self._order_subset(np.arange(n), qx, qy)
            return idx, d
        # Ask for one extra neighbour: if the k-th and (k+1)-th distances
        # differ, the tree's selection is unambiguous and only needs
        # reordering. Otherwise fall back to a ball query so equidistant
        # samples compete by ingestion order, same as a full scan.
        kk = min(n, k + 1)
        _, raw_idx = self._tree.query([qx, qy], k=kk)
        raw_idx = np.atleast_1d(raw_idx)
        idx, d = self._order_subset(raw_idx, qx, qy)
        if kk > k and d[k - 1] < d[k]:
            return idx[:k], d[:k]
        radius = float(d[min(k, len(d) - 1)]) * (1.0 + 1e-12) + 1e-12
        ball = np.array(self._tree.query_ball_point([qx, qy], radius), dtype=int)
        idx, d = self._order_subset(ball, qx, qy)
        return idx[:k], d[:k]

    def neighbors(self, qx: float, qy: float, k: int) -> list[tuple[SamplePoint, float]]:
        idx, d = self.query(qx, qy, k)
        return [(self.samples[int(i)], float(di)) for i, di in zip(idx, d)]


def knn(index: SpatialIndex, query: tuple[float, float], k: int) -> list[tuple[SamplePoint, float]]:
    """k nearest samples to the query point, nearest first.

    Ties are broken by sample ingestion order, matching a brute-force scan
    sorted by (distance, index).
    """
    return index.neighbors(float(query[0]), float(query[1]), k)


def idw_elevation(neighbors: Sequence[tuple[SamplePoint, float]]) -> float:
    """Inverse-distance weighted elevation from pre-selected neighbours.

    A zero-distance neighbour short-circuits to that sample's elevation
    exactly; otherwise each neighbour contributes weight 1/distance.
    """
    if len(neighbors) == 0:
        raise TerrainDataError("no terrain data")
    for sample, dist in neighbors:
        if dist == 0.0:
            return float(sample.z)
    num = 0.0
    den = 0.0
    for sample, dist in neighbors:
        w = 1.0 / dist
        num += w * sample.z
        den += w
    return num / den


@dataclass
class UniformGrid:
    """Row-major elevation lattice; z[j, i] sits at (origin + i*dg, origin + j*dg)."""

    origin_x: float
    origin_y: float
    spacing: float
    z: np.ndarray  # shape (ny, nx), read-only after construction

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        if self.z.ndim != 2 or self.z.shape[0] < 2 or self.z.shape[1] < 2:
            raise TerrainDataError("grid needs at least 2x2 nodes")
        if not np.all(np.isfinite(self.z)):
            raise TerrainDataError("grid contains non-finite elevations")
        self.z.setflags(write=False)  # grids are shared freely; keep them immutable

    @property
    def nx(self) -> int:
        return self.z.shape[1]

    @property
    def ny(self) -> int:
        return self.z.shape[0]

    def bounds(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of the evaluable region."""
        return (
            self.origin_x,
            self.origin_y,
            self.origin_x + (self.nx - 1) * self.spacing,
            self.origin_y + (self.ny - 1) * self.spacing,
        )

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.bounds()
        return x0 <= x <= x1 and y0 <= y <= y1

    def node_xy(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin_x + self.spacing * np.arange(self.nx)
        ys = self.origin_y + self.spacing * np.arange(self.ny)
        return xs, ys


def _check_not_collinear(xy: np.ndarray) -> None:
    if xy.shape[0] < 3:
        raise TerrainDataError("degenerate sample extent (collinear samples)")
    centered = xy - xy.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[1] <= 1e-12 * max(1.0, float(s[0])):
        raise TerrainDataError("degenerate sample extent (collinear samples)")


def build_uniform_grid(samples: Sequence[SamplePoint], params: GridBuildParams) -> UniformGrid:
    """Grid scattered samples onto a uniform lattice by k-nearest IDW.

    The lattice covers the sample bounding box expanded outward to the next
    spacing multiple, so every sample lies within the evaluable bounds. Each
    node elevation is the IDW of its idw_neighbors nearest samples; a node
    that coincides with a sample reproduces that sample's z exactly.
    """
    n = len(samples)
    if n == 0:
        raise TerrainDataError("no terrain data")
    k = params.idw_neighbors
    if n < k:
        raise TerrainDataError("fewer samples than idw_neighbors", have=n, need=k)
    index = SpatialIndex(samples)
    _check_not_collinear(index._xy)

    dg = params.grid_spacing
    min_x, min_y = index._xy.min(axis=0)
    max_x, max_y = index._xy.max(axis=0)
    ox = math.floor(min_x / dg) * dg
    oy = math.floor(min_y / dg) * dg
    hx = math.ceil(max_x / dg) * dg
    hy = math.ceil(max_y / dg) * dg
    nx = int(round((hx - ox) / dg)) + 1
    ny = int(round((hy - oy) / dg)) + 1

    xs = ox + dg * np.arange(nx)
    ys = oy + dg * np.arange(ny)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    # Batch path: query one extra neighbour, reorder by (recomputed
    # distance, index); nodes whose k-th distance ties with the (k+1)-th go
    # through the scalar query for an exact ingestion-order tie-break.
    kk = min(n, k + 1)
    _, raw_idx = index._tree.query(nodes, k=kk)
    raw_idx = raw_idx.reshape(len(nodes), kk)
    dx = index._xy[raw_idx, 0] - nodes[:, 0:1]
    dy = index._xy[raw_idx, 1] - nodes[:, 1:2]
    dist = np.hypot(dx, dy)
    order = np.lexsort((raw_idx, dist), axis=1)
    rows = np.arange(len(nodes))[:, None]
    idx_sorted = raw_idx[rows, order]
    dist_sorted = dist[rows, order]

    if kk > k:
        ambiguous = ~(dist_sorted[:, k - 1] < dist_sorted[:, k])
    else:
        ambiguous = np.zeros(len(nodes), dtype=bool)
    for row in np.nonzero(ambiguous)[0]:
        qi, qd = index.query(float(nodes[row, 0]), float(nodes[row, 1]), k)
        idx_sorted[row, :k] = qi
        dist_sorted[row, :k] = qd

    nd = dist_sorted[:, :k]
    nz = index._z[idx_sorted[:, :k]]
    values = np.empty(len(nodes))
    exact = nd[:, 0] == 0.0
    values[exact] = nz[exact, 0]
    inexact = ~exact
    if np.any(inexact):
        w = 1.0 / nd[inexact]
        # Column-by-column accumulation keeps the summation order identical
        # to the scalar idw_elevation loop.
        num = w[:, 0] * nz[inexact, 0]
        den = w[:, 0].copy()
        for j in range(1, k):
            num += w[:, j] * nz[inexact, j]
            den += w[:, j]
        values[inexact] = num / den

    return UniformGrid(ox, oy, dg, values.reshape(ny, nx))


def _cell_weights(origin: float, spacing: float, n: int, coord):
    """Lower node index plus the two lerp weights along one axis."""
    u = (np.asarray(coord, dtype=float) - origin) / spacing
    i = np.floor(u).astype(int)
    i = np.clip(i, 0, n - 2)
    lo = origin + spacing * i
    w1 = (np.asarray(coord, dtype=float) - lo) / spacing
    w0 = (lo + spacing - np.asarray(coord, dtype=float)) / spacing
    return i, w0, w1


def eval_bilinear(grid: UniformGrid, x: float, y: float) -> float:
    """Bilinear elevation at (x, y); exact at nodes, no extrapolation."""
    if not grid.contains(x, y):
        raise OutsideTerrainExtent("query outside terrain extent", x=float(x), y=float(y))
    i, wx0, wx1 = _cell_weights(grid.origin_x, grid.spacing, grid.nx, x)
    j, wy0, wy1 = _cell_weights(grid.origin_y, grid.spacing, grid.ny, y)
    i = int(i)
    j = int(j)
    z_low = wx0 * grid.z[j, i] + wx1 * grid.z[j, i + 1]
    z_high = wx0 * grid.z[j + 1, i] + wx1 * grid.z[j + 1, i + 1]
    return float(wy0 * z_low + wy1 * z_high)


def eval_bilinear_many(grid: UniformGrid, x, y) -> np.ndarray:
    """Vectorised eval_bilinear; raises if any query leaves the bounds."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, y0, x1, y1 = grid.bounds()
    bad = (x < x0) | (x > x1) | (y < y0) | (y > y1)
    if np.any(bad):
        b = int(np.nonzero(bad.ravel())[0][0])
        raise OutsideTerrainExtent(
            "query outside terrain extent",
            x=float(x.ravel()[b]),
            y=float(y.ravel()[b]),
        )
    i, wx0, wx1 = _cell_weights(grid.origin_x, grid.spacing, grid.nx, x)
    j, wy0, wy1 = _cell_weights(grid.origin_y, grid.spacing, grid.ny, y)
    z_low = wx0 * grid.z[j, i] + wx1 * grid.z[j, i + 1]
    z_high = wx0 * grid.z[j + 1, i] + wx1 * grid.z[j + 1, i + 1]
    return wy0 * z_low + wy1 * z_high


def dedupe_samples(samples: Sequence[SamplePoint]) -> list[SamplePoint]:
    """Drop repeated (x, y) positions, keeping the first occurrence.

    A repeat with a different z is reported through warnings since it means
    the survey data disagrees with itself.
    """
    import warnings

    seen: dict[tuple[float, float], float] = {}
    out: list[SamplePoint] = []
    for s in samples:
        key = (s.x, s.y)
        if key in seen:
            if seen[key] != s.z:
                warnings.warn(
                    f"duplicate sample at ({s.x}, {s.y}) with differing z "
                    f"({seen[key]} kept, {s.z} dropped)",
                    stacklevel=2,
                )
            continue
        seen[key] = s.z
        out.append(s)
    return out
