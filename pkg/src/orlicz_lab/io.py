"""CSV and JSON readers/writers for grid functions, densities and reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InvalidSpecError, ShapeError
from .grid import BoxDomain, GridFunction
from .nfunc import NFunctionSpec


def write_grid_csv(path, u: GridFunction) -> Path:
    path = Path(path)
    d = u.domain.d
    header = ["x1", "value"] if d == 1 else ["x1", "x2", "value"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for pt, val in zip(u.domain.points, u.values):
            w.writerow([repr(float(c)) for c in pt] + [repr(float(val))])
    return path


def read_grid_csv(path, domain: BoxDomain) -> GridFunction:
    """Load a grid function written by write_grid_csv onto ``domain``."""
    rows = _read_numeric_rows(path)
    arr = np.array(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != domain.d + 1 or arr.shape[0] != domain.size:
        raise ShapeError(f"{path}: expected {domain.size} rows of {domain.d + 1} columns")
    if not np.allclose(arr[:, :-1], domain.points, rtol=0, atol=1e-9 * domain.diameter):
        raise ShapeError(f"{path}: coordinates do not match the configured grid")
    return GridFunction(domain, arr[:, -1])


def _read_numeric_rows(path):
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if rows:
                    raise
                # header line
    return rows


def read_density_csv(path, eval_range=None) -> NFunctionSpec:
    """Tabulated density from a two-column (t, m(t)) CSV."""
    rows = _read_numeric_rows(path)
    if not rows or any(len(r) != 2 for r in rows):
        raise InvalidSpecError(f"{path}: expected two columns t, m(t)")
    t, m = zip(*rows)
    return NFunctionSpec.tabulated(t, m, eval_range=eval_range)


def write_density_csv(path, t, m) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "m"])
        for a, b in zip(t, m):
            w.writerow([repr(float(a)), repr(float(b))])
    return path


def write_table_csv(path, rows: Iterable[dict]) -> Path:
    path = Path(path)
    rows = list(rows)
    keys = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k)) for k in keys})
    return path


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path
