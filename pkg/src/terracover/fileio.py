"""File formats: terrain samples, grid cache, lanes, contours, config.

All writers are atomic (write to a temp name, then rename) and fully
deterministic: floats are serialized with repr (shortest round-trip form),
JSON keys are sorted, and nothing emits timestamps. Two runs over the same
inputs must produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError, ValidationError
from .geometry import FieldContour
from .metrics import PlannedLane
from .terrain import SamplePoint, UniformGrid, dedupe_samples


def fmt(value) -> str:
    """Shortest exact decimal form of a float (or plain int)."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


# -- terrain samples ---------------------------------------------------------


def read_terrain(path: Path) -> list[SamplePoint]:
    """Read scattered samples from CSV (x,y,z header) or whitespace XYZ."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValidationError("no terrain data", path=str(path))
    first = [c.strip().lower() for c in lines[0].split(",")]
    samples: list[SamplePoint] = []
    if first[:3] == ["x", "y", "z"]:
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) < 3:
                raise ValidationError("malformed terrain row", path=str(path), row=ln)
            samples.append(SamplePoint(float(parts[0]), float(parts[1]), float(parts[2])))
    else:
        for ln in lines:
            parts = ln.split()
            if len(parts) < 3:
                raise ValidationError("malformed terrain row", path=str(path), row=ln)
            samples.append(SamplePoint(float(parts[0]), float(parts[1]), float(parts[2])))
    return dedupe_samples(samples)


def write_terrain_csv(path: Path, samples: Sequence[SamplePoint]) -> None:
    buf = io.StringIO()
    buf.write("x,y,z\n")
    for s in samples:
        buf.write(f"{fmt(s.x)},{fmt(s.y)},{fmt(s.z)}\n")
    atomic_write_text(path, buf.getvalue())


# -- grid cache --------------------------------------------------------------

_GRID_HEADER_KEYS = ("origin_x", "origin_y", "spacing", "nx", "ny")


def write_grid_cache(path: Path, grid: UniformGrid) -> None:
    """Header rows carrying origin/spacing/shape, then row-major elevations."""
    buf = io.StringIO()
    buf.write(f"origin_x,{fmt(grid.origin_x)}\n")
    buf.write(f"origin_y,{fmt(grid.origin_y)}\n")
    buf.write(f"spacing,{fmt(grid.spacing)}\n")
    buf.write(f"nx,{grid.nx}\n")
    buf.write(f"ny,{grid.ny}\n")
    for j in range(grid.ny):
        buf.write(",".join(fmt(v) for v in grid.z[j]) + "\n")
    atomic_write_text(path, buf.getvalue())


def read_grid_cache(path: Path) -> UniformGrid:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    lines = path.read_text().splitlines()
    header = {}
    for i, key in enumerate(_GRID_HEADER_KEYS):
        parts = lines[i].split(",")
        if len(parts) != 2 or parts[0] != key:
            raise ValidationError("malformed grid cache header", path=str(path), line=lines[i])
        header[key] = parts[1]
    nx = int(header["nx"])
    ny = int(header["ny"])
    rows = []
    for ln in lines[5 : 5 + ny]:
        vals = [float(v) for v in ln.split(",")]
        if len(vals) != nx:
            raise ValidationError("grid cache row length mismatch", path=str(path))
        rows.append(vals)
    if len(rows) != ny:
        raise ValidationError("grid cache row count mismatch", path=str(path))
    return UniformGrid(
        float(header["origin_x"]), float(header["origin_y"]), float(header["spacing"]),
        np.array(rows),
    )


def is_grid_cache(path: Path) -> bool:
    try:
        with open(path) as f:
            return f.readline().startswith("origin_x,")
    except OSError:
        return False


# -- contours ----------------------------------------------------------------


def read_contour(path: Path) -> FieldContour:
    """Field boundary from CSV (x,y ring) or GeoJSON Polygon (exterior only)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        return _contour_from_geojson(json.loads(text))
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    start = 1 if [c.strip().lower() for c in lines[0].split(",")][:2] == ["x", "y"] else 0
    verts = []
    for ln in lines[start:]:
        parts = ln.split(",")
        if len(parts) < 2:
            raise ValidationError("malformed contour row", path=str(path), row=ln)
        verts.append((float(parts[0]), float(parts[1])))
    return FieldContour(np.array(verts))


def _contour_from_geojson(obj: dict) -> FieldContour:
    geom = obj
    if obj.get("type") == "FeatureCollection":
        features = obj.get("features", [])
        if not features:
            raise ValidationError("GeoJSON contour has no features")
        geom = features[0].get("geometry", {})
    elif obj.get("type") == "Feature":
        geom = obj.get("geometry", {})
    if geom.get("type") != "Polygon":
        raise ValidationError("contour GeoJSON must be a Polygon")
    rings = geom.get("coordinates", [])
    if not rings:
        raise ValidationError("contour polygon has no rings")
    if len(rings) > 1:
        raise GeometryError("contour holes are not supported")
    return FieldContour(np.array([[float(c[0]), float(c[1])] for c in rings[0]]))


def write_contour_csv(path: Path, contour: FieldContour) -> None:
    buf = io.StringIO()
    buf.write("x,y\n")
    for x, y in contour.vertices:
        buf.write(f"{fmt(x)},{fmt(y)}\n")
    atomic_write_text(path, buf.getvalue())


def write_contour_geojson(path: Path, contour: FieldContour) -> None:
    ring = [[float(x), float(y)] for x, y in contour.vertices]
    ring.append(ring[0])
    obj = {
        "type": "Feature",
        "geometry": {"type": "Polygon", "coordinates": [ring]},
        "properties": {"kind": "field_contour"},
    }
    write_json(path, obj)


# -- lanes -------------------------------------------------------------------

LANE_CSV_HEADER = (
    "lane_id,point_id,x,y,z,beta_deg,w_hat,h_proj,iterations,converged,excessive_roll"
)


def write_lanes_csv(path: Path, lanes: Sequence[PlannedLane]) -> None:
    """One row per solver point when diagnostics exist, else per vertex.

    Lanes without solver diagnostics (the seed, baseline lanes, headland
    rings) leave the diagnostic cells empty.
    """
    buf = io.StringIO()
    buf.write(LANE_CSV_HEADER + "\n")
    for lane in lanes:
        if lane.diagnostics:
            for pid, pt in enumerate(lane.diagnostics):
                buf.write(
                    ",".join(
                        [
                            str(lane.lane_id),
                            str(pid),
                            fmt(pt.position[0]),
                            fmt(pt.position[1]),
                            fmt(pt.position[2]),
                            fmt(math.degrees(pt.roll)),
                            fmt(pt.effective_offset),
                            fmt(pt.achieved_height),
                            str(pt.iterations),
                            "true" if pt.converged else "false",
                            "true" if pt.excessive_roll else "false",
                        ]
                    )
                    + "\n"
                )
        else:
            for pid, row in enumerate(lane.line.points):
                buf.write(
                    ",".join(
                        [
                            str(lane.lane_id),
                            str(pid),
                            fmt(row[0]),
                            fmt(row[1]),
                            fmt(row[2]),
                            "",
                            "",
                            "",
                            "",
                            "",
                            "",
                        ]
                    )
                    + "\n"
                )
    atomic_write_text(path, buf.getvalue())


def write_lanes_geojson(path: Path, lanes: Sequence[PlannedLane]) -> None:
    """Driveable lane geometry as LineStrings with diagnostics in properties."""
    features = []
    for lane in lanes:
        props: dict = {"lane_id": lane.lane_id, "kind": lane.kind}
        if lane.diagnostics:
            props["beta_deg"] = [round(math.degrees(p.roll), 9) for p in lane.diagnostics]
            props["w_hat"] = [round(p.effective_offset, 9) for p in lane.diagnostics]
            props["h_proj"] = [round(p.achieved_height, 9) for p in lane.diagnostics]
            props["iterations"] = [p.iterations for p in lane.diagnostics]
            props["converged"] = [p.converged for p in lane.diagnostics]
            props["excessive_roll"] = lane.excessive_roll
            props["exited_extent"] = lane.exited_extent
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [
                        [float(x), float(y), float(z)] for x, y, z in lane.line.points
                    ],
                },
                "properties": props,
            }
        )
    write_json(path, {"type": "FeatureCollection", "features": features})


def read_lanes_csv(path: Path) -> list[dict]:
    """Rows of the lane CSV as dicts with typed values (None for blanks)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            parsed: dict = {"lane_id": int(row["lane_id"]), "point_id": int(row["point_id"])}
            for key in ("x", "y", "z", "beta_deg", "w_hat", "h_proj"):
                parsed[key] = float(row[key]) if row[key] != "" else None
            parsed["iterations"] = int(row["iterations"]) if row["iterations"] != "" else None
            for key in ("converged", "excessive_roll"):
                parsed[key] = {"true": True, "false": False, "": None}[row[key]]
            out.append(parsed)
    return out


# -- flat key-value config ---------------------------------------------------


def parse_config_text(text: str) -> dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment; keys are flag names."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError("malformed config line", line=lineno, text=raw)
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def read_config_file(path: Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    return parse_config_text(path.read_text())
