"""Coverage metrics and flat-baseline tests.

Reference values on the inclined plane z = 0.2 y are analytic: map spacing
w * cos(slope angle) keeps ground-arc spacing exactly w, while the flat
baseline keeps map spacing w and spreads to w * sqrt(1.04) on the ground.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from terracover import (
    FieldContour,
    HeadlandSpec,
    MetricsError,
    PlannedLane,
    Polyline3,
    SolverConfig,
    baseline_2d_plan,
    cascade_lanes,
    coverage_report,
    floating_lane_from_chord,
    gap_overlap_raster,
    ground_spacing_profile,
    lateral_deviation,
    mainfield_boundary,
    oriented_seed_chord,
    polyline_deviation,
)
from terracover.metrics import _cross_section_point, _pair_stats, coverage_counts

from conftest import rect_contour

SLOPE_ANGLE = math.atan(0.2)
BASELINE_GROUND_SPACING = 36.0 * math.sqrt(1.04)  # 36.712940497868054


def straight_lane(y: float, z: float, x0=0.0, x1=100.0, n=11) -> Polyline3:
    xs = np.linspace(x0, x1, n)
    return Polyline3(np.column_stack([xs, np.full(n, y), np.full(n, z)]))


def as_plan(lines, kind="baseline") -> list[PlannedLane]:
    return [PlannedLane(lane_id=i, line=line, kind=kind) for i, line in enumerate(lines)]


class TestSeedChord:
    def test_offset_side_orients_chord(self, field_100x400, vehicle):
        main = mainfield_boundary(field_100x400, HeadlandSpec())
        left = oriented_seed_chord(field_100x400, main, vehicle, SolverConfig(), seed_edge=0)
        right = oriented_seed_chord(
            field_100x400, main, vehicle, SolverConfig(offset_side="right"), seed_edge=0
        )
        assert np.allclose(left[0], right[1]) and np.allclose(left[1], right[0])
        # Interior of the field lies to the left of the left-handed chord.
        u = left[1] - left[0]
        normal = np.array([-u[1], u[0]])
        probe = 0.5 * (left[0] + left[1]) + normal / np.hypot(*normal)
        assert 0.0 < probe[1] < 400.0

    def test_inset_half_width(self, field_100x400, vehicle, solver):
        main = mainfield_boundary(field_100x400, HeadlandSpec())
        p0, p1 = oriented_seed_chord(field_100x400, main, vehicle, solver, seed_edge=0)
        assert p0[1] == pytest.approx(18.0) and p1[1] == pytest.approx(18.0)


class TestFloatingLane:
    def test_flat_chord_densified(self, flat_grid, vehicle, solver):
        lane = floating_lane_from_chord((0, 18), (100, 18), flat_grid, vehicle, solver)
        assert len(lane) == 11  # resampled to floor(100 / 9.6462) segments
        assert np.allclose(lane.points[:, 1], 18.0)
        assert np.allclose(lane.points[:, 2], 2.0)

    def test_follows_terrain(self, sinusoid_grid, vehicle, solver):
        # Ridges run across y, so a chord along y rides up and down them.
        # Between the ~9.6 m projection stations the lane is straight, so it
        # may sag up to f'' * (station/2)^2 / 2 ~ 0.35 m off the surface.
        lane = floating_lane_from_chord((50, 0), (50, 100), sinusoid_grid, vehicle, solver)
        expect = 2.0 * np.sin(2.0 * np.pi * lane.points[:, 1] / 50.0) + 2.0
        assert np.allclose(lane.points[:, 2], expect, atol=0.4)
        assert lane.points[0, 2] == pytest.approx(2.0, abs=1e-9)
        assert lane.points[-1, 2] == pytest.approx(2.0, abs=1e-9)
        assert lane.points[:, 2].max() > 3.5 and lane.points[:, 2].min() < 0.5


class TestBaselinePlan:
    def test_flat_lane_ladder(self, flat_grid, vehicle, solver, field_100x400):
        lanes = baseline_2d_plan(field_100x400, flat_grid, vehicle, solver, seed_edge=0)
        assert len(lanes) == 11
        ys = [lane.points[0, 1] for lane in lanes]
        assert np.allclose(ys, 18.0 + 36.0 * np.arange(11))
        for lane in lanes:
            assert np.allclose(lane.points[:, 1], lane.points[0, 1])
            assert np.allclose(lane.points[:, 2], 2.0)

    def test_incline_same_map_ladder(self, incline_grid, vehicle, solver, field_100x400):
        lanes = baseline_2d_plan(field_100x400, incline_grid, vehicle, solver, seed_edge=0)
        assert len(lanes) == 11
        for k, lane in enumerate(lanes):
            y = 18.0 + 36.0 * k
            assert np.allclose(lane.points[:, 1], y)
            assert np.allclose(lane.points[:, 2], 0.2 * y + 2.0)


class TestGroundSpacing:
    def test_compensated_lanes_hold_working_width(self, incline_grid, vehicle):
        step = 36.0 * math.cos(SLOPE_ANGLE)
        a = straight_lane(18.0, 0.2 * 18.0 + 2.0)
        b = straight_lane(18.0 + step, 0.2 * (18.0 + step) + 2.0)
        profile = ground_spacing_profile(a, b, incline_grid, vehicle)
        assert len(profile) == 21  # stations every 5 m over 100 m
        assert np.allclose(profile, 36.0, atol=1e-6)

    def test_map_spaced_lanes_spread_on_slope(self, incline_grid, vehicle):
        a = straight_lane(18.0, 0.2 * 18.0 + 2.0)
        b = straight_lane(54.0, 0.2 * 54.0 + 2.0)
        profile = ground_spacing_profile(a, b, incline_grid, vehicle)
        assert np.allclose(profile, BASELINE_GROUND_SPACING, atol=1e-6)

    def test_non_overlapping_spans_skipped(self, flat_grid, vehicle):
        a = straight_lane(18.0, 2.0)
        b = straight_lane(54.0, 2.0, x0=40.0, x1=60.0, n=5)
        profile = ground_spacing_profile(a, b, flat_grid, vehicle)
        assert len(profile) == 5  # only stations x = 40..60 see a crossing
        assert np.allclose(profile, 36.0, atol=1e-9)

    def test_cross_section_picks_nearest_crossing(self):
        lane = straight_lane(54.0, 2.0)
        q = _cross_section_point(lane, np.array([37.0, 18.0]), np.array([1.0, 0.0]))
        assert q is not None
        assert q[0] == pytest.approx(37.0, abs=1e-9)
        assert q[1] == pytest.approx(54.0)

    def test_implied_roll_of_connecting_arm(self, incline_grid, vehicle):
        a = PlannedLane(0, straight_lane(18.0, 0.2 * 18.0 + 2.0))
        b = PlannedLane(1, straight_lane(54.0, 0.2 * 54.0 + 2.0))
        stats, _ = _pair_stats(a, b, incline_grid, vehicle, sample_step=5.0)
        assert stats.implied_roll_max == pytest.approx(SLOPE_ANGLE, abs=1e-6)
        assert stats.mean_spacing == pytest.approx(BASELINE_GROUND_SPACING, abs=1e-6)
        assert stats.max_abs_error == pytest.approx(BASELINE_GROUND_SPACING - 36.0, abs=1e-6)


class TestDeviation:
    def test_identical_plans_deviate_zero(self):
        plan = [straight_lane(18.0, 2.0), straight_lane(54.0, 2.0)]
        assert lateral_deviation(plan, plan) == 0.0

    def test_shifted_plan_measures_shift(self):
        a = [straight_lane(18.0, 2.0)]
        b = [straight_lane(20.5, 2.0)]
        assert lateral_deviation(a, b) == pytest.approx(2.5, abs=1e-9)

    def test_vertical_difference_ignored_in_2d(self):
        a = straight_lane(18.0, 2.0)
        b = straight_lane(18.0, 9.0)
        assert polyline_deviation(a, b, dims=2) == 0.0
        assert polyline_deviation(a, b, dims=3) == pytest.approx(7.0, abs=1e-9)

    def test_lane_count_mismatch_rejected(self):
        with pytest.raises(MetricsError, match="lane count mismatch"):
            lateral_deviation([straight_lane(18.0, 2.0)], [])


class TestRaster:
    def test_flat_touching_strips(self, flat_grid, vehicle, field_100x400):
        plan = as_plan(straight_lane(18.0 + 36.0 * k, 2.0) for k in range(11))
        gap, overlap = gap_overlap_raster(plan, flat_grid, vehicle, field_100x400)
        # Strips tile 0..396; the last 4 m stay bare and nothing doubles up.
        assert gap == pytest.approx(0.01, abs=1e-12)
        assert overlap == 0.0

    def test_refining_the_cell_barely_moves_fractions(self, flat_grid, vehicle, field_100x400):
        plan = as_plan(straight_lane(18.0 + 36.0 * k, 2.0) for k in range(11))
        g1, o1 = gap_overlap_raster(plan, flat_grid, vehicle, field_100x400, cell=1.0)
        g2, o2 = gap_overlap_raster(plan, flat_grid, vehicle, field_100x400, cell=0.5)
        assert abs(g1 - g2) < 0.005
        assert abs(o1 - o2) < 0.005

    def test_rolled_boom_narrows_the_strip(self, incline_grid, vehicle, field_100x400):
        # A single lane across the slope covers w * cos(roll), not w.
        lane = as_plan([straight_lane(200.0, 0.2 * 200.0 + 2.0)])
        counts, inside, _ = coverage_counts(lane, incline_grid, vehicle, field_100x400)
        covered_rows = np.flatnonzero((counts >= 1).any(axis=1))
        width = len(covered_rows)  # 1 m cells, strip normal to y
        assert width == pytest.approx(36.0 * math.cos(SLOPE_ANGLE), abs=1.0)

    def test_cell_size_validated(self, flat_grid, vehicle, field_100x400):
        plan = as_plan([straight_lane(18.0, 2.0)])
        with pytest.raises(MetricsError, match="raster cell"):
            gap_overlap_raster(plan, flat_grid, vehicle, field_100x400, cell=4.0)
        with pytest.raises(MetricsError, match="raster cell"):
            gap_overlap_raster(plan, flat_grid, vehicle, field_100x400, cell=0.0)

    def test_empty_field_raster_rejected(self, flat_grid, vehicle):
        sliver = FieldContour([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]])
        with pytest.raises(MetricsError, match="empty"):
            gap_overlap_raster([], flat_grid, vehicle, sliver)


@pytest.fixture(scope="module")
def incline_plan(incline_grid, vehicle, solver, field_100x400):
    seed = floating_lane_from_chord((0, 18), (100, 18), incline_grid, vehicle, solver)
    cascaded = cascade_lanes(seed, incline_grid, field_100x400, vehicle, solver)
    plan = [PlannedLane(0, seed, kind="seed")]
    plan += [
        PlannedLane(i + 1, lane.line, kind="adjacent", diagnostics=lane.diagnostics)
        for i, lane in enumerate(cascaded)
    ]
    return plan


class TestCoverageReport:
    def test_incline_report(self, incline_plan, incline_grid, vehicle, field_100x400):
        report, profiles = coverage_report(
            incline_plan, incline_grid, vehicle, field_100x400
        )
        assert len(report.lanes) == 11
        assert len(report.pairs) == len(profiles) == 10
        for pair in report.pairs:
            assert pair.mean_spacing == pytest.approx(36.0, abs=0.2)
            assert pair.max_abs_error < 0.2
        for stats in report.lanes[1:]:
            assert stats.converged_fraction == 1.0
            assert abs(stats.max_abs_roll) == pytest.approx(SLOPE_ANGLE, abs=1e-6)
        assert 0.0 <= report.gap_fraction < 0.05
        assert report.overlap_fraction == 0.0

    def test_headland_lanes_excluded_from_pairs(
        self, incline_plan, incline_grid, vehicle, field_100x400
    ):
        ring = Polyline3(
            np.array([[5, 5, 3.0], [95, 5, 21.0], [95, 395, 81.0], [5, 395, 81.0], [5, 5, 3.0]])
        )
        with_headland = incline_plan + [PlannedLane(99, ring, kind="headland")]
        report, _ = coverage_report(with_headland, incline_grid, vehicle, field_100x400)
        assert len(report.lanes) == 11
        assert all(s.kind != "headland" for s in report.lanes)

    def test_deviation_against_baseline(
        self, incline_plan, incline_grid, vehicle, solver, field_100x400
    ):
        baseline = as_plan(
            baseline_2d_plan(field_100x400, incline_grid, vehicle, solver, seed_edge=0)
        )
        report, _ = coverage_report(
            incline_plan, incline_grid, vehicle, field_100x400, other_plan=baseline
        )
        # Drift accumulates w * (1 - cos(slope)) per lane over ten lanes.
        expect = 10.0 * 36.0 * (1.0 - math.cos(SLOPE_ANGLE))
        assert report.max_lateral_deviation == pytest.approx(expect, abs=0.1)


class TestStatsValidation:
    def test_fraction_bounds_enforced(self):
        from terracover.metrics import LaneStats

        with pytest.raises(MetricsError):
            LaneStats(0, "seed", 5, 0.1, None, None, 1.5, False)

    def test_report_fraction_bounds(self):
        from terracover.metrics import CoverageReport

        with pytest.raises(MetricsError):
            CoverageReport(lanes=[], pairs=[], gap_fraction=-0.1, overlap_fraction=0.0)
