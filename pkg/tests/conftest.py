"""Shared fixtures: analytic terrain grids and standard configurations.

Unit tests build grids directly from analytic surfaces so expectations
stay closed-form; only the CLI and acceptance tests go through scattered
samples and interpolation.
"""

from __future__ import annotations

import numpy as np
import pytest

from terracover import FieldContour, SolverConfig, UniformGrid, VehicleConfig
from terracover.synth import flat_elevation, incline_elevation, sinusoid_elevation

EXTENT = (-40.0, -40.0, 140.0, 440.0)


def grid_from_fn(fn, extent=EXTENT, spacing=1.0) -> UniformGrid:
    x0, y0, x1, y1 = extent
    xs = np.arange(x0, x1 + spacing / 2, spacing)
    ys = np.arange(y0, y1 + spacing / 2, spacing)
    gx, gy = np.meshgrid(xs, ys)
    z = np.array([[fn(float(x), float(y)) for x, y in zip(rx, ry)] for rx, ry in zip(gx, gy)])
    return UniformGrid(x0, y0, spacing, z)


def rect_contour(width: float, length: float) -> FieldContour:
    return FieldContour(
        np.array([[0.0, 0.0], [width, 0.0], [width, length], [0.0, length]])
    )


@pytest.fixture(scope="session")
def flat_grid() -> UniformGrid:
    return grid_from_fn(flat_elevation(0.0))


@pytest.fixture(scope="session")
def incline_grid() -> UniformGrid:
    # z = 0.2 * y, a 11.31 degree slope along +y
    return grid_from_fn(incline_elevation(0.2))


@pytest.fixture(scope="session")
def sinusoid_grid() -> UniformGrid:
    return grid_from_fn(sinusoid_elevation(2.0, 50.0))


@pytest.fixture(scope="session")
def vehicle() -> VehicleConfig:
    return VehicleConfig(working_width=36.0, boom_height=2.0)


@pytest.fixture(scope="session")
def solver() -> SolverConfig:
    return SolverConfig()


@pytest.fixture(scope="session")
def field_100x400() -> FieldContour:
    return rect_contour(100.0, 400.0)
