"""Command line front end.

Subcommands:
  synth     emit a deterministic synthetic terrain sample file
  gridify   build the elevation grid from samples and cache it
  plan      terrain-following 3-D lane plan
  baseline  flat 2-D plan dropped onto the terrain
  compare   both plans plus the comparison report

Values for angles are taken in degrees on the command line and converted
to radians internally. A flat `key = value` config file can pre-set any
flag of the planning subcommands; explicit flags win. Errors are reported
as a single JSON line on stdout and mapped to exit codes: 2 for missing
files, 3 for validation or data errors, 4 when planning yields no
converged lane, 64 for usage mistakes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .errors import PlanningError, PlanningFailure, ValidationError
from .geometry import FieldContour
from .pipeline import RunConfig, gridify, run_pipeline
from .planner import SolverConfig, VehicleConfig
from .synth import SamplePattern, synth_terrain
from .terrain import GridBuildParams

USAGE_EXIT = 64

PLAN_DEFAULTS = {
    "terrain": None,
    "contour": None,
    "out": None,
    "width": 36.0,
    "height": 2.0,
    "axle": 1.5,
    "beta_max": 30.0,
    "eps": 0.1,
    "dbeta": 1.0,
    "grid_spacing": 1.0,
    "idw_k": 3,
    "dpsi_max": 30.0,
    "headland_passes": 0,
    "side": "left",
    "max_lanes": 500,
    "raster_cell": 1.0,
    "sample_step": 5.0,
    "seed_edge": None,
    "svg": False,
    "compare": False,
}

GRIDIFY_DEFAULTS = {
    "terrain": None,
    "out": None,
    "grid_spacing": 1.0,
    "idw_k": 3,
}


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {raw}")


_CONVERT = {
    "terrain": str,
    "contour": str,
    "out": str,
    "width": float,
    "height": float,
    "axle": float,
    "beta_max": float,
    "eps": float,
    "dbeta": float,
    "grid_spacing": float,
    "idw_k": int,
    "dpsi_max": float,
    "headland_passes": int,
    "side": str,
    "max_lanes": int,
    "raster_cell": float,
    "sample_step": float,
    "seed_edge": int,
    "svg": _parse_bool,
    "compare": _parse_bool,
}


class _Parser(argparse.ArgumentParser):
    """argparse that exits 64 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_plan_flags(p: argparse.ArgumentParser, with_compare: bool) -> None:
    sup = argparse.SUPPRESS
    p.add_argument("--terrain", default=sup, help="terrain samples or grid cache file")
    p.add_argument("--contour", default=sup, help="field boundary file (CSV ring or GeoJSON)")
    p.add_argument("--out", default=sup, help="output directory")
    p.add_argument("--width", type=float, default=sup, help="working width in metres [36]")
    p.add_argument("--height", type=float, default=sup, help="boom height in metres [2]")
    p.add_argument("--axle", type=float, default=sup, help="axle half-width in metres [1.5]")
    p.add_argument("--beta-max", type=float, default=sup, help="roll limit in degrees [30]")
    p.add_argument("--eps", type=float, default=sup, help="height tolerance in metres [0.1]")
    p.add_argument("--dbeta", type=float, default=sup, help="roll search step in degrees [1]")
    p.add_argument("--grid-spacing", type=float, default=sup, help="grid node spacing in metres [1]")
    p.add_argument("--idw-k", type=int, default=sup, help="extra interpolation neighbours [3]")
    p.add_argument("--dpsi-max", type=float, default=sup, help="heading change cap in degrees [30]")
    p.add_argument("--headland-passes", type=int, default=sup, help="headland ring count [0]")
    p.add_argument("--side", choices=("left", "right"), default=sup, help="cascade side [left]")
    p.add_argument("--max-lanes", type=int, default=sup, help="lane count cap [500]")
    p.add_argument("--raster-cell", type=float, default=sup, help="coverage raster cell in metres [1]")
    p.add_argument("--sample-step", type=float, default=sup, help="spacing metric step in metres [5]")
    p.add_argument("--seed-edge", type=int, default=sup, help="contour edge index for the seed lane")
    p.add_argument("--svg", action="store_true", default=sup, help="render figures")
    if with_compare:
        p.add_argument("--compare", action="store_true", default=sup, help="also run the baseline")
    p.add_argument("--config", default=sup, help="flat key = value config file")


def build_parser() -> _Parser:
    parser = _Parser(prog="terracover", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_synth = sub.add_parser("synth", help="emit a synthetic terrain fixture")
    p_synth.add_argument("--kind", choices=("flat", "incline", "sinusoid"), required=True)
    p_synth.add_argument("--slope", type=float, default=0.2, help="incline rise over run [0.2]")
    p_synth.add_argument("--direction", type=float, default=90.0, help="surface direction in degrees [90]")
    p_synth.add_argument("--amplitude", type=float, default=2.0, help="sinusoid amplitude in metres [2]")
    p_synth.add_argument("--wavelength", type=float, default=50.0, help="sinusoid wavelength in metres [50]")
    p_synth.add_argument("--value", type=float, default=0.0, help="flat surface elevation [0]")
    p_synth.add_argument("--size", type=float, nargs=2, default=(100.0, 400.0), metavar=("X", "Y"),
                         help="field size in metres [100 400]")
    p_synth.add_argument("--margin", type=float, default=40.0, help="sampled margin around the field [40]")
    p_synth.add_argument("--step", type=float, default=5.0, help="survey grid step in metres [5]")
    p_synth.add_argument("--jitter", type=float, default=0.4, help="jitter as a fraction of step [0.4]")
    p_synth.add_argument("--seed", type=int, default=0, help="sample jitter seed [0]")
    p_synth.add_argument("--out", required=True, help="terrain CSV output path")
    p_synth.add_argument("--contour-out", default=None, help="also write the field contour CSV here")
    p_synth.set_defaults(func=_cmd_synth)

    p_grid = sub.add_parser("gridify", help="build and cache the elevation grid")
    sup = argparse.SUPPRESS
    p_grid.add_argument("--terrain", default=sup)
    p_grid.add_argument("--out", default=sup, help="grid cache output path")
    p_grid.add_argument("--grid-spacing", type=float, default=sup)
    p_grid.add_argument("--idw-k", type=int, default=sup)
    p_grid.add_argument("--config", default=sup)
    p_grid.set_defaults(func=_cmd_gridify)

    for name, help_text, with_compare in (
        ("plan", "terrain-following 3-D lane plan", True),
        ("baseline", "flat 2-D plan dropped onto the terrain", False),
        ("compare", "both plans plus comparison report", False),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_plan_flags(p, with_compare)
        p.set_defaults(func=_cmd_plan, command=name)
    return parser


def _merge_config(args: argparse.Namespace, defaults: dict, parser: _Parser) -> dict:
    """defaults < config file < explicit flags; values typed like the flags."""
    merged = dict(defaults)
    given = {k: v for k, v in vars(args).items() if k in defaults}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        for key, raw in fileio.read_config_file(Path(config_path)).items():
            if key not in defaults:
                parser.error(f"unknown config key: {key}")
            merged[key] = _CONVERT[key](raw)
    merged.update(given)
    return merged


def _require(merged: dict, keys: tuple[str, ...], parser: _Parser) -> None:
    missing = [f"--{k.replace('_', '-')}" for k in keys if merged[k] is None]
    if missing:
        parser.error("the following arguments are required: " + ", ".join(missing))


def _cmd_synth(args: argparse.Namespace, parser: _Parser) -> int:
    sx, sy = args.size
    extent = (-args.margin, -args.margin, sx + args.margin, sy + args.margin)
    pattern = SamplePattern(step=args.step, jitter=args.jitter, seed=args.seed)
    samples = synth_terrain(
        args.kind,
        extent,
        pattern,
        value=args.value,
        slope=args.slope,
        direction_deg=args.direction,
        amplitude=args.amplitude,
        wavelength=args.wavelength,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fileio.write_terrain_csv(out, samples)
    if args.contour_out is not None:
        ring = FieldContour(np.array([[0.0, 0.0], [sx, 0.0], [sx, sy], [0.0, sy]]))
        contour_out = Path(args.contour_out)
        contour_out.parent.mkdir(parents=True, exist_ok=True)
        fileio.write_contour_csv(contour_out, ring)
    print(f"wrote {len(samples)} samples to {out}")
    return 0


def _cmd_gridify(args: argparse.Namespace, parser: _Parser) -> int:
    merged = _merge_config(args, GRIDIFY_DEFAULTS, parser)
    _require(merged, ("terrain", "out"), parser)
    grid = GridBuildParams(
        grid_spacing=merged["grid_spacing"], idw_extra_neighbors=merged["idw_k"]
    )
    built = gridify(Path(merged["terrain"]), Path(merged["out"]), grid)
    print(f"wrote {built.nx}x{built.ny} grid to {merged['out']}")
    return 0


def _cmd_plan(args: argparse.Namespace, parser: _Parser) -> int:
    merged = _merge_config(args, PLAN_DEFAULTS, parser)
    _require(merged, ("terrain", "contour", "out"), parser)
    mode = args.command
    if mode == "plan" and merged["compare"]:
        mode = "compare"
    vehicle = VehicleConfig(
        working_width=merged["width"],
        boom_height=merged["height"],
        axle_half_width=merged["axle"],
        max_roll=math.radians(merged["beta_max"]),
    )
    solver = SolverConfig(
        tolerance=merged["eps"],
        roll_step=math.radians(merged["dbeta"]),
        offset_side=merged["side"],
        max_heading_change=math.radians(merged["dpsi_max"]),
    )
    grid = GridBuildParams(
        grid_spacing=merged["grid_spacing"], idw_extra_neighbors=merged["idw_k"]
    )
    cfg = RunConfig(
        terrain_path=Path(merged["terrain"]),
        contour_path=Path(merged["contour"]),
        out_dir=Path(merged["out"]),
        vehicle=vehicle,
        mode=mode,
        solver=solver,
        grid=grid,
        headland_passes=merged["headland_passes"],
        seed_edge=merged["seed_edge"],
        max_lanes=merged["max_lanes"],
        raster_cell=merged["raster_cell"],
        sample_step=merged["sample_step"],
        svg=merged["svg"],
    )
    result = run_pipeline(cfg)
    for key, lanes, rep in (
        ("plan", result.plan_lanes, result.plan_report),
        ("baseline", result.baseline_lanes, result.baseline_report),
    ):
        if lanes is None:
            continue
        print(
            f"{key}: {len(lanes)} lanes, gap {rep.gap_fraction:.4f}, "
            f"overlap {rep.overlap_fraction:.4f}"
        )
    print(f"artifacts in {cfg.out_dir}")
    return 0


def _emit_error(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.error("a subcommand is required")
    try:
        return args.func(args, parser)
    except FileNotFoundError as exc:
        _emit_error({"module": "cli_io", "error": "file not found", "path": str(exc)})
        return 2
    except PlanningFailure as exc:
        _emit_error(exc.to_json_dict())
        return 4
    except PlanningError as exc:
        _emit_error(exc.to_json_dict())
        return 3


if __name__ == "__main__":
    sys.exit(main())
