"""Bird's-view figures for planned coverage, rendered to SVG.

Rendering is deterministic: a fixed hash salt keeps matplotlib's internal
ids stable and the SVG date metadata is suppressed, so repeated runs
produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "terracover"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .geometry import FieldContour  # noqa: E402
from .metrics import PlannedLane  # noqa: E402
from .terrain import UniformGrid  # noqa: E402

_KIND_STYLE = {
    "seed": {"color": "#d62728", "lw": 1.6, "ls": "-"},
    "adjacent": {"color": "#1f77b4", "lw": 1.1, "ls": "-"},
    "baseline": {"color": "#7f7f7f", "lw": 1.0, "ls": "--"},
    "headland": {"color": "#2ca02c", "lw": 1.0, "ls": ":"},
}


def _save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _draw_contour(ax, contour: FieldContour, **kw) -> None:
    ring = np.vstack([contour.vertices, contour.vertices[:1]])
    ax.plot(ring[:, 0], ring[:, 1], **kw)


def render_plan_figure(
    path: Path,
    contour: FieldContour,
    lanes: Sequence[PlannedLane],
    mainfield: FieldContour | None = None,
    terrain: UniformGrid | None = None,
) -> None:
    """Top-down view: terrain shading, field boundary, and lane centerlines."""
    fig, ax = plt.subplots(figsize=(8, 8))
    if terrain is not None:
        xlo, xhi, ylo, yhi = terrain.bounds()
        xs = np.linspace(xlo, xhi, terrain.nx)
        ys = np.linspace(ylo, yhi, terrain.ny)
        cf = ax.contourf(xs, ys, terrain.z, levels=16, cmap="terrain", alpha=0.45)
        fig.colorbar(cf, ax=ax, label="elevation [m]", shrink=0.8)
    _draw_contour(ax, contour, color="black", lw=1.6)
    if mainfield is not None and mainfield is not contour:
        _draw_contour(ax, mainfield, color="black", lw=0.9, ls="--")
    seen: set[str] = set()
    for lane in lanes:
        style = _KIND_STYLE.get(lane.kind, _KIND_STYLE["adjacent"])
        label = lane.kind if lane.kind not in seen else None
        seen.add(lane.kind)
        ax.plot(lane.line.points[:, 0], lane.line.points[:, 1], label=label, **style)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("planned lanes")
    if seen:
        ax.legend(loc="upper right", fontsize=8)
    _save_svg(fig, path)


def render_coverage_figure(
    path: Path,
    contour: FieldContour,
    counts: np.ndarray,
    cell: float,
    origin: tuple[float, float],
) -> None:
    """Coverage counts shaded to expose gaps (0) and overlaps (2+)."""
    fig, ax = plt.subplots(figsize=(8, 8))
    ny, nx = counts.shape
    extent = (
        origin[0],
        origin[0] + nx * cell,
        origin[1],
        origin[1] + ny * cell,
    )
    shown = np.clip(counts.astype(float), 0, 3)
    im = ax.imshow(
        shown,
        origin="lower",
        extent=extent,
        cmap="RdYlGn_r",
        vmin=0,
        vmax=3,
        interpolation="nearest",
    )
    fig.colorbar(im, ax=ax, label="coverage count", shrink=0.8)
    _draw_contour(ax, contour, color="black", lw=1.4)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("coverage count per cell")
    _save_svg(fig, path)
