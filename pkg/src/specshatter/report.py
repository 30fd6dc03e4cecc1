"""Deterministic CSV/JSON serialization of reports.

Every artifact carries the sha256 of the canonical run configuration and the
seed.  Non-finite floats are written as the strings ``"inf"``, ``"-inf"`` and
``"nan"`` so the JSON stays standard; complex numbers become ``[re, im]``.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import MissingColumns


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def from_json_float(x):
    if isinstance(x, str):
        return float(x)
    return x


def canonical_json(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def dumps(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj, meta=None):
    path = Path(path)
    payload = dict(to_jsonable(obj))
    if meta:
        payload["meta"] = to_jsonable(meta)
    path.write_text(dumps(payload))
    return path


def _cell(v):
    v = to_jsonable(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v)
    return str(v)


def write_csv(path, rows, columns, meta=None):
    """Rows of dicts with ``columns``; metadata goes in leading ``#`` lines."""
    buf = io.StringIO()
    if meta:
        for key in sorted(meta):
            buf.write(f"# {key}={_cell(meta[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue())
    return Path(path)


def read_csv(path, required=()):
    """Parse a report CSV into ``(meta, columns)``; numeric columns become arrays.

    Raises
    ------
    MissingColumns
        If the file has no header, no data rows, or lacks a required column.
    """
    text = Path(path).read_text()
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        elif line.strip():
            body.append(line)
    if not body:
        raise MissingColumns(f"{path} has no header")
    reader = csv.reader(body)
    header = next(reader)
    rows = list(reader)
    missing = [c for c in required if c not in header]
    if missing:
        raise MissingColumns(f"{path} lacks columns {missing}")
    if not rows:
        raise MissingColumns(f"{path} has no data rows")
    cols = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = vals
    return meta, cols
