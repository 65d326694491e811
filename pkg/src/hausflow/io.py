"""Serialization of metric fields and JSON reports.

A field is stored as a CSV matrix (row-major grid order, header row of node
coordinates, floats written with ``repr`` so they parse back bit-exactly)
plus a JSON envelope holding the window and provenance metadata.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import GridMismatchError
from .groups import get_group
from .metrics import MetricField
from .window import WindowSpec, sample_window

SCHEMA_VERSION = "1.0"


def _fmt(x) -> str:
    return repr(float(x))


def _label(p) -> str:
    return ";".join(_fmt(c) for c in p)


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings ``inf``/``-inf``/``nan``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def window_to_dict(spec: WindowSpec) -> dict:
    return {
        "group": spec.group.group_id,
        "bounds": [list(b) for b in spec.bounds],
        "resolution": list(spec.resolution),
        "padding_radius": spec.padding_radius,
    }


def window_from_dict(d: dict) -> WindowSpec:
    return WindowSpec(
        get_group(d["group"]),
        tuple(tuple(b) for b in d["bounds"]),
        tuple(d["resolution"]),
        float(d["padding_radius"]),
    )


def write_field_csv(field_: MetricField, path) -> str:
    """Write the matrix; returns its sha256."""
    pts = field_.grid.points
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node"] + [_label(p) for p in pts])
        for p, row in zip(pts, field_.values):
            w.writerow([_label(p)] + [_fmt(x) for x in row])
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_field_csv(path, grid, label: str = "", meta: dict | None = None) -> MetricField:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0][1:]
    expect = [_label(p) for p in grid.points]
    if header != expect:
        raise GridMismatchError(f"{path}: header coordinates do not match the grid")
    vals = np.array([[float(x) for x in r[1:]] for r in rows[1:]], dtype=float)
    return MetricField(grid, vals, label, dict(meta or {}))


def save_field(field_: MetricField, path) -> Path:
    """Write ``<stem>.csv`` and the ``<stem>.json`` envelope; returns the envelope path."""
    if field_.grid.spec is None:
        raise ValueError("field grid has no window spec attached")
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    digest = write_field_csv(field_, csv_path)
    env = {
        "schema_version": SCHEMA_VERSION,
        "label": field_.label,
        "meta": field_.meta,
        "window": window_to_dict(field_.grid.spec),
        "shape": list(field_.grid.shape),
        "csv": csv_path.name,
        "sha256": digest,
    }
    json_path = path.with_suffix(".json")
    write_json(json_path, env)
    return json_path


def _unjson(obj):
    if isinstance(obj, dict):
        return {k: _unjson(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_unjson(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def load_field(path, max_points: int = 1_000_000) -> MetricField:
    path = Path(path)
    env = json.loads(path.read_text(encoding="utf-8"))
    grid = sample_window(window_from_dict(env["window"]), max_points=max_points)
    csv_path = path.parent / env["csv"]
    if hashlib.sha256(csv_path.read_bytes()).hexdigest() != env["sha256"]:
        raise ValueError(f"{csv_path} does not match the checksum in {path}")
    return read_field_csv(csv_path, grid, env.get("label", ""), _unjson(env.get("meta", {})))


def write_rows_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
