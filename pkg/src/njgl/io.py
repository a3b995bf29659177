"""File formats and atomic persistence for the command-line tools.

Matrices travel as dense, row-major, header-free, comma-delimited CSV at
full round-trip precision.  Configuration and diagnostics are JSON with
sorted keys.  Tables (metrics rows, cross-validation sweeps) are CSV
with a single header line.  All writes go through a temp file followed
by an atomic rename.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = [
    "atomic_write_text",
    "write_matrix",
    "read_matrix",
    "write_json",
    "read_json",
    "write_table",
    "read_table",
]

#: 17 significant digits round-trip any float64 exactly.
_FLOAT_FMT = "%.17g"


def atomic_write_text(path, text: str) -> None:
    """Write text to ``path`` via a same-directory temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path, matrix: np.ndarray) -> None:
    """Dense CSV, one row per line, no header, full precision."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    buf = _io.StringIO()
    np.savetxt(buf, matrix, delimiter=",", fmt=_FLOAT_FMT)
    atomic_write_text(path, buf.getvalue())


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as handle:
        return json.load(handle)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return _FLOAT_FMT % value
    return str(value)


def write_table(path, header, rows) -> None:
    """CSV with one header line; cells formatted at full precision."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        return header, [row for row in reader]
