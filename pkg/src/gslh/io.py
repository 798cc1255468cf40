"""Matrix Market coordinate files, plain-text vectors and JSON with fixed
17-significant-digit reals.

The integer writer handles values beyond the int64 range, which the scipy
reader and writer do not.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ParseError

SCHEMA_VERSION = "1.0"


def _fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix(path, M, integer: bool = False) -> None:
    M = sp.coo_matrix(M)
    field = "integer" if integer else "real"
    order = np.lexsort((M.row, M.col))
    lines = [f"%%MatrixMarket matrix coordinate {field} general",
             f"{M.shape[0]} {M.shape[1]} {M.nnz}"]
    for k in order:
        v = M.data[k]
        text = str(int(v)) if integer else _fmt_real(v)
        lines.append(f"{M.row[k] + 1} {M.col[k] + 1} {text}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_integer_rows(path, shape, entries) -> None:
    """Integer coordinate file from exact ``(row, col, int)`` triples."""
    entries = sorted(entries, key=lambda e: (e[1], e[0]))
    lines = ["%%MatrixMarket matrix coordinate integer general",
             f"{shape[0]} {shape[1]} {len(entries)}"]
    lines += [f"{r + 1} {c + 1} {int(v)}" for r, c, v in entries]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> sp.csr_matrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise ParseError(f"{path}: missing MatrixMarket header")
    head = lines[0].lower().split()
    if len(head) < 5 or head[1] != "matrix" or head[2] != "coordinate":
        raise ParseError(f"{path}: only 'matrix coordinate' files are supported")
    field, symmetry = head[3], head[4]
    if field not in ("real", "integer", "double") or symmetry != "general":
        raise ParseError(f"{path}: unsupported field/symmetry {field}/{symmetry}")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    try:
        m, n, nnz = (int(t) for t in body[0].split())
        rows, cols, vals = [], [], []
        for ln in body[1:1 + nnz]:
            i, j, v = ln.split()[:3]
            rows.append(int(i) - 1)
            cols.append(int(j) - 1)
            vals.append(float(int(v)) if field == "integer" else float(v))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed entry ({exc})") from exc
    if len(vals) != nnz:
        raise ParseError(f"{path}: expected {nnz} entries, found {len(vals)}")
    if any(not (0 <= i < m and 0 <= j < n) for i, j in zip(rows, cols)):
        raise ParseError(f"{path}: index out of range")
    if len(set(zip(rows, cols))) != nnz:
        raise ParseError(f"{path}: duplicate coordinates")
    M = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    M.eliminate_zeros()
    return M


def write_vector(path, v) -> None:
    Path(path).write_text("".join(_fmt_real(x) + "\n" for x in np.ravel(v)))


def read_vector(path) -> np.ndarray:
    try:
        tokens = Path(path).read_text().split()
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read vector {path}: {exc}") from exc


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return _fmt_real(x)
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)
               for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        items = [pad + _encode(x, indent, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every real written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))
