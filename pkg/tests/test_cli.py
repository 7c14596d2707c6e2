"""End-to-end CLI tests: subcommands, exit codes, artifacts, determinism.

Everything runs in-process through ``terracover.cli.main`` on small
synthetic fields so the whole module stays fast.
"""

from __future__ import annotations

import contextlib
import io
import json
from pathlib import Path

import pytest

from terracover import fileio
from terracover.cli import main


def run_cli(*argv: str) -> tuple[int, str]:
    buf = io.StringIO()
    code: int | None = None
    try:
        with contextlib.redirect_stdout(buf):
            code = main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    return code, buf.getvalue()


def last_json_line(stdout: str) -> dict:
    return json.loads(stdout.strip().splitlines()[-1])


@pytest.fixture(scope="session")
def workspace(tmp_path_factory) -> Path:
    """Small flat and incline fields with exact (jitter-free) sampling."""
    root = tmp_path_factory.mktemp("cli")
    code, _ = run_cli(
        "synth", "--kind", "flat", "--size", "100", "100", "--step", "2", "--jitter", "0",
        "--out", str(root / "flat.csv"), "--contour-out", str(root / "flat_contour.csv"),
    )
    assert code == 0
    code, _ = run_cli(
        "synth", "--kind", "incline", "--size", "100", "100", "--step", "1", "--jitter", "0",
        "--out", str(root / "incline.csv"), "--contour-out", str(root / "incline_contour.csv"),
    )
    assert code == 0
    return root


def plan_args(workspace: Path, out: Path, field: str = "flat") -> list[str]:
    return [
        "--terrain", str(workspace / f"{field}.csv"),
        "--contour", str(workspace / f"{field}_contour.csv"),
        "--out", str(out),
    ]


class TestSynth:
    def test_same_seed_reproduces_bytes(self, tmp_path, workspace):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            code, _ = run_cli(
                "synth", "--kind", "sinusoid", "--size", "60", "60", "--seed", "7",
                "--out", str(out),
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("synth", "--kind", "flat", "--size", "60", "60", "--seed", "1", "--out", str(a))
        run_cli("synth", "--kind", "flat", "--size", "60", "60", "--seed", "2", "--out", str(b))
        assert a.read_bytes() != b.read_bytes()

    def test_contour_file_is_the_field_rectangle(self, workspace):
        contour = fileio.read_contour(workspace / "flat_contour.csv")
        assert contour.bounds() == (0.0, 0.0, 100.0, 100.0)


class TestGridify:
    def test_cache_roundtrip_and_determinism(self, tmp_path, workspace):
        a, b = tmp_path / "a_grid.csv", tmp_path / "b_grid.csv"
        for out in (a, b):
            code, _ = run_cli(
                "gridify", "--terrain", str(workspace / "flat.csv"), "--out", str(out)
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()
        grid = fileio.read_grid_cache(a)
        assert grid.spacing == 1.0
        assert grid.bounds() == (-40.0, -40.0, 140.0, 140.0)

    def test_planning_from_cache_matches_samples(self, tmp_path, workspace):
        cache = tmp_path / "grid.csv"
        run_cli("gridify", "--terrain", str(workspace / "flat.csv"), "--out", str(cache))
        out_a, out_b = tmp_path / "from_samples", tmp_path / "from_cache"
        code, _ = run_cli("plan", *plan_args(workspace, out_a))
        assert code == 0
        code, _ = run_cli(
            "plan", "--terrain", str(cache),
            "--contour", str(workspace / "flat_contour.csv"), "--out", str(out_b),
        )
        assert code == 0
        assert (out_a / "lanes.csv").read_bytes() == (out_b / "lanes.csv").read_bytes()


@pytest.fixture(scope="module")
def plan_run(tmp_path_factory, workspace):
    out = tmp_path_factory.mktemp("plan_run") / "out"
    code, stdout = run_cli("plan", *plan_args(workspace, out))
    assert code == 0
    return out, stdout


class TestPlanArtifacts:
    def test_expected_files(self, plan_run):
        out, _ = plan_run
        for name in ("grid_cache.csv", "lanes.csv", "lanes.geojson", "metrics.json", "manifest.json"):
            assert (out / name).exists(), name
        assert not (out / "baseline_lanes.csv").exists()
        assert not list(out.glob("*.tmp"))

    def test_lane_csv_shape(self, plan_run):
        out, _ = plan_run
        lines = (out / "lanes.csv").read_text().splitlines()
        assert lines[0] == fileio.LANE_CSV_HEADER
        rows = fileio.read_lanes_csv(out / "lanes.csv")
        assert {r["lane_id"] for r in rows} == {0, 1, 2}  # 3 lanes on the 100 m field
        adjacent = [r for r in rows if r["lane_id"] > 0]
        assert all(r["converged"] for r in adjacent)

    def test_manifest_defaults_and_digests(self, plan_run, workspace):
        out, _ = plan_run
        manifest = json.loads((out / "manifest.json").read_text())
        params = manifest["parameters"]
        assert params["tolerance"] == 0.1
        assert params["roll_step_deg"] == pytest.approx(1.0, abs=1e-12)
        assert params["grid_spacing"] == 1.0
        assert params["idw_extra_neighbors"] == 3
        assert params["working_width"] == 36.0
        assert params["boom_height"] == 2.0
        assert params["axle_half_width"] == 1.5
        assert params["max_roll_deg"] == pytest.approx(30.0, abs=1e-12)
        assert params["max_heading_change_deg"] == pytest.approx(30.0, abs=1e-12)
        assert params["offset_side"] == "left"
        assert manifest["inputs"]["terrain"]["sha256"] == fileio.sha256_file(workspace / "flat.csv")
        assert manifest["outputs"]["lanes.csv"] == fileio.sha256_file(out / "lanes.csv")
        assert "manifest.json" not in manifest["outputs"]

    def test_stdout_summary(self, plan_run):
        _, stdout = plan_run
        assert "plan: 3 lanes" in stdout

    def test_rerun_is_byte_identical(self, plan_run, tmp_path, workspace):
        out_a, _ = plan_run
        out_b = tmp_path / "again"
        code, _ = run_cli("plan", *plan_args(workspace, out_b))
        assert code == 0
        for name in ("lanes.csv", "lanes.geojson", "metrics.json", "manifest.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


class TestModes:
    def test_baseline_only(self, tmp_path, workspace):
        out = tmp_path / "out"
        code, stdout = run_cli("baseline", *plan_args(workspace, out))
        assert code == 0
        assert (out / "baseline_lanes.csv").exists()
        assert not (out / "lanes.csv").exists()
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["mode"] == "baseline"
        assert "plan" not in metrics

    def test_compare_reports_both(self, tmp_path, workspace):
        out = tmp_path / "out"
        code, stdout = run_cli("compare", *plan_args(workspace, out))
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["mode"] == "compare"
        for key in ("plan", "baseline"):
            assert metrics[key]["lane_count"] == 3
            assert len(metrics[key]["spacing_profiles"]) == 2
        comparison = metrics["comparison"]
        assert comparison["lane_count_plan"] == comparison["lane_count_baseline"] == 3
        # Flat field: both plans coincide.
        assert comparison["max_lateral_deviation"] < 1e-6
        assert "baseline: 3 lanes" in stdout

    def test_plan_with_compare_flag(self, tmp_path, workspace):
        out = tmp_path / "out"
        code, _ = run_cli("plan", "--compare", *plan_args(workspace, out))
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["mode"] == "compare"

    def test_svg_rendering(self, tmp_path, workspace):
        out = tmp_path / "out"
        code, _ = run_cli("plan", "--svg", "--compare", *plan_args(workspace, out))
        assert code == 0
        for name in ("plan.svg", "coverage_plan.svg", "coverage_baseline.svg"):
            body = (out / name).read_bytes()
            assert body.startswith(b"<?xml"), name
        manifest = json.loads((out / "manifest.json").read_text())
        assert "plan.svg" in manifest["outputs"]


class TestRollFlag:
    def test_tight_roll_limit_flags_lanes(self, tmp_path, workspace):
        out = tmp_path / "out"
        code, _ = run_cli(
            "plan", "--beta-max", "10", *plan_args(workspace, out, field="incline")
        )
        assert code == 0  # flagged, not failed
        rows = fileio.read_lanes_csv(out / "lanes.csv")
        flagged = [r for r in rows if r["excessive_roll"]]
        assert flagged  # the 11.3 degree slope exceeds the 10 degree limit
        assert all(r["converged"] for r in flagged)


class TestHeadland:
    def test_rings_written_and_excluded_from_metrics(self, tmp_path):
        root = tmp_path
        run_cli(
            "synth", "--kind", "flat", "--size", "200", "200", "--step", "4", "--jitter", "0",
            "--out", str(root / "t.csv"), "--contour-out", str(root / "c.csv"),
        )
        out = root / "out"
        code, _ = run_cli(
            "plan", "--headland-passes", "1",
            "--terrain", str(root / "t.csv"), "--contour", str(root / "c.csv"),
            "--out", str(out),
        )
        assert code == 0
        rows = fileio.read_lanes_csv(out / "headland_lanes.csv")
        assert {r["lane_id"] for r in rows} == {0}
        ring = [(r["x"], r["y"]) for r in rows]
        assert ring[0] == ring[-1]  # closed loop
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["parameters"]["headland_pass_width"] == 36.0
        metrics = json.loads((out / "metrics.json").read_text())
        # Mainfield is 128 m wide: seed + 3 cascaded lanes, no headland rows.
        assert metrics["plan"]["lane_count"] == 4


class TestConfigFile:
    def test_config_sets_and_flags_override(self, tmp_path, workspace):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("width = 30\nsample-step = 2.5\n# comment\n")
        out = tmp_path / "out"
        code, _ = run_cli(
            "plan", "--config", str(cfg), "--sample-step", "4", *plan_args(workspace, out)
        )
        assert code == 0
        params = json.loads((out / "manifest.json").read_text())["parameters"]
        assert params["working_width"] == 30.0  # from config
        assert params["sample_step"] == 4.0  # flag wins

    def test_unknown_config_key_is_usage_error(self, tmp_path, workspace):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus = 1\n")
        code, _ = run_cli("plan", "--config", str(cfg), *plan_args(workspace, tmp_path / "o"))
        assert code == 64


class TestExitCodes:
    def test_missing_terrain_exits_2(self, tmp_path, workspace):
        code, stdout = run_cli(
            "plan", "--terrain", str(tmp_path / "nope.csv"),
            "--contour", str(workspace / "flat_contour.csv"), "--out", str(tmp_path / "o"),
        )
        assert code == 2
        payload = last_json_line(stdout)
        assert payload["module"] == "cli_io"
        assert payload["error"] == "file not found"
        assert "nope.csv" in payload["path"]

    def test_degenerate_contour_exits_3(self, tmp_path, workspace):
        bad = tmp_path / "bad_contour.csv"
        bad.write_text("x,y\n0,0\n10,0\n")
        code, stdout = run_cli(
            "plan", "--terrain", str(workspace / "flat.csv"),
            "--contour", str(bad), "--out", str(tmp_path / "o"),
        )
        assert code == 3
        assert last_json_line(stdout)["module"] == "field_geometry"

    def test_too_few_samples_exits_3(self, tmp_path, workspace):
        thin = tmp_path / "thin.csv"
        thin.write_text("x,y,z\n0,0,1\n5,5,2\n")
        code, stdout = run_cli(
            "plan", "--terrain", str(thin),
            "--contour", str(workspace / "flat_contour.csv"), "--out", str(tmp_path / "o"),
        )
        assert code == 3
        assert last_json_line(stdout)["module"] == "terrain_model"

    def test_invalid_vehicle_exits_3(self, tmp_path, workspace):
        code, stdout = run_cli(
            "plan", "--width", "-5", *plan_args(workspace, tmp_path / "o")
        )
        assert code == 3
        assert last_json_line(stdout)["module"] == "cli_io"

    def test_no_room_to_cascade_exits_4(self, tmp_path):
        # Terrain sampled only over the 40 m field: the first adjacent lane
        # would probe past the extent, so no lane cascades at all.
        run_cli(
            "synth", "--kind", "flat", "--size", "40", "40", "--margin", "0",
            "--step", "2", "--jitter", "0",
            "--out", str(tmp_path / "t.csv"), "--contour-out", str(tmp_path / "c.csv"),
        )
        out = tmp_path / "o"
        code, stdout = run_cli(
            "plan", "--terrain", str(tmp_path / "t.csv"), "--contour", str(tmp_path / "c.csv"),
            "--out", str(out), "--seed-edge", "0",
        )
        assert code == 4
        payload = last_json_line(stdout)
        assert payload["module"] == "lane_planner"
        assert payload["error"] == "no converged lane"
        assert not out.exists()  # nothing half-written

    def test_usage_errors_exit_64(self, tmp_path, workspace):
        assert run_cli()[0] == 64  # no subcommand
        assert run_cli("plough")[0] == 64  # unknown subcommand
        assert run_cli("plan", "--bogus")[0] == 64  # unknown flag
        assert run_cli("synth", "--kind", "flat")[0] == 64  # missing --out
        assert run_cli("plan", "--terrain", "x.csv")[0] == 64  # missing required flags
        assert run_cli("plan", "--width", "abc", *plan_args(workspace, tmp_path / "o"))[0] == 64
        assert run_cli("plan", "--side", "up", *plan_args(workspace, tmp_path / "o"))[0] == 64
