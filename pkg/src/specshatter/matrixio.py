"""Plain-text and JSON matrix files.

Text layout::

    n m
    a11 a12 ... a1m
    ...

Complex entries are written ``a+bi`` (``j`` is accepted as well). The JSON
form is ``{"n": n, "rows": [[...], ...]}`` where entries are numbers or
complex strings.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, NonFinite


def parse_entry(token):
    """Parse one matrix entry: a real decimal or an ``a+bi`` complex token."""
    if isinstance(token, (int, float)):
        return float(token)
    if isinstance(token, (list, tuple)) and len(token) == 2:
        return complex(float(token[0]), float(token[1]))
    tok = str(token).strip().replace(" ", "")
    if not tok:
        raise ConfigError("empty matrix entry")
    try:
        return float(tok)
    except ValueError:
        pass
    if tok.endswith("i"):
        tok = tok[:-1] + "j"
        if tok[-2:] in ("+j", "-j") or tok == "j":
            tok = tok[:-1] + "1j"
    try:
        return complex(tok)
    except ValueError as exc:
        raise ConfigError(f"cannot parse matrix entry {token!r}") from exc


def _as_array(rows):
    values = [[parse_entry(t) for t in row] for row in rows]
    if not values or any(len(r) != len(values[0]) for r in values):
        raise ConfigError("matrix rows must be non-empty and of equal length")
    if any(isinstance(v, complex) for row in values for v in row):
        arr = np.array(values, dtype=complex)
    else:
        arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFinite("matrix has non-finite entries")
    return arr


def parse_matrix_text(text):
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ConfigError("first line must be 'n m'")
    n, m = int(header[0]), int(header[1])
    rows = [ln.split() for ln in lines[1:]]
    if len(rows) != n or any(len(r) != m for r in rows):
        raise ConfigError(f"expected {n} rows of {m} entries")
    return _as_array(rows)


def matrix_from_json(obj):
    """Build an array from ``{"n":..., "rows": [...]}`` or a bare list of rows."""
    if isinstance(obj, dict):
        if "rows" not in obj:
            raise ConfigError("JSON matrix needs a 'rows' field")
        arr = _as_array(obj["rows"])
        if "n" in obj and int(obj["n"]) != arr.shape[0]:
            raise ConfigError("'n' does not match the number of rows")
        return arr
    if isinstance(obj, list):
        return _as_array(obj)
    raise ConfigError("unsupported JSON matrix value")


def read_matrix(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith(("{", "[")):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON matrix") from exc
        return matrix_from_json(obj)
    return parse_matrix_text(text)


def format_entry(value):
    if isinstance(value, complex) or np.iscomplexobj(value):
        value = complex(value)
        sign = "+" if value.imag >= 0 else "-"
        return f"{value.real!r}{sign}{abs(value.imag)!r}i"
    return repr(float(value))


def write_matrix(path, matrix):
    matrix = np.atleast_2d(np.asarray(matrix))
    n, m = matrix.shape
    lines = [f"{n} {m}"]
    for row in matrix:
        lines.append(" ".join(format_entry(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
