"""Synthetic terrain fixtures: flat, incline and sinusoid surfaces.

Each kind has an analytic closed form that stays available for oracle
checks, plus a deterministic scattered-sample generator that mimics a
jittered survey pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError
from .terrain import SamplePoint

ElevationFn = Callable[[float, float], float]


@dataclass(frozen=True)
class SamplePattern:
    """Deterministic jittered sampling grid.

    step is the nominal spacing of the survey pattern; jitter is the
    uniform displacement amplitude as a fraction of step. The same seed
    always reproduces the same sample cloud.
    """

    step: float = 5.0
    jitter: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if not (self.step > 0):
            raise ValidationError("sample pattern step must be positive")
        if not (0.0 <= self.jitter < 1.0):
            raise ValidationError("sample jitter must be in [0, 1)")


def flat_elevation(value: float = 0.0) -> ElevationFn:
    """Constant elevation everywhere."""
    return lambda x, y: float(value)


def incline_elevation(slope: float, direction_deg: float = 90.0) -> ElevationFn:
    """Plane rising with the given rise-over-run slope along direction_deg.

    direction_deg follows math convention: 0 points along +x, 90 along +y.
    The default matches the usual test surface z = slope * y.
    """
    phi = math.radians(direction_deg)
    cx, cy = math.cos(phi), math.sin(phi)
    return lambda x, y: float(slope * (cx * x + cy * y))


def sinusoid_elevation(
    amplitude: float, wavelength: float, direction_deg: float = 90.0
) -> ElevationFn:
    """Sinusoidal ridges: z = amplitude * sin(2*pi*s / wavelength).

    s is the coordinate along direction_deg, so ridges run perpendicular
    to that direction.
    """
    if not (wavelength > 0):
        raise ValidationError("wavelength must be positive")
    phi = math.radians(direction_deg)
    cx, cy = math.cos(phi), math.sin(phi)
    w = 2.0 * math.pi / wavelength
    return lambda x, y: float(amplitude * math.sin(w * (cx * x + cy * y)))


def elevation_fn(kind: str, **kwargs) -> ElevationFn:
    """Analytic surface for a named fixture kind."""
    if kind == "flat":
        return flat_elevation(kwargs.get("value", 0.0))
    if kind == "incline":
        return incline_elevation(
            kwargs.get("slope", 0.2), kwargs.get("direction_deg", 90.0)
        )
    if kind == "sinusoid":
        return sinusoid_elevation(
            kwargs.get("amplitude", 2.0),
            kwargs.get("wavelength", 50.0),
            kwargs.get("direction_deg", 90.0),
        )
    raise ValidationError(f"unknown terrain kind: {kind}")


def scatter_samples(
    fn: ElevationFn,
    extent: tuple[float, float, float, float],
    pattern: SamplePattern = SamplePattern(),
) -> list[SamplePoint]:
    """Sample the surface on a jittered grid clipped to the extent.

    extent is (x_min, y_min, x_max, y_max). Jitter is drawn from a seeded
    generator and clipped back into the extent so the sample bounding box
    stays the requested region.
    """
    x0, y0, x1, y1 = extent
    if not (x1 > x0 and y1 > y0):
        raise ValidationError("extent must have positive width and height")
    rng = np.random.default_rng(pattern.seed)
    xs = np.arange(x0, x1 + pattern.step / 2, pattern.step)
    ys = np.arange(y0, y1 + pattern.step / 2, pattern.step)
    gx, gy = np.meshgrid(xs, ys)
    amp = pattern.jitter * pattern.step
    jx = rng.uniform(-amp, amp, size=gx.shape)
    jy = rng.uniform(-amp, amp, size=gy.shape)
    px = np.clip(gx + jx, x0, x1).ravel()
    py = np.clip(gy + jy, y0, y1).ravel()
    return [SamplePoint(float(x), float(y), fn(float(x), float(y))) for x, y in zip(px, py)]


def synth_terrain(
    kind: str,
    extent: tuple[float, float, float, float],
    pattern: SamplePattern = SamplePattern(),
    **kwargs,
) -> list[SamplePoint]:
    """Scattered samples of a named synthetic surface over the extent."""
    return scatter_samples(elevation_fn(kind, **kwargs), extent, pattern)
