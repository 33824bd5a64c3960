"""Dense CSV matrices and key=value run manifests."""
from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path

import numpy as np

from .errors import ParseError


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_matrix(path) -> np.ndarray:
    """Read a rectangular numeric CSV; a non-numeric first line is taken as a header."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    start = 0
    if rows and not all(_is_number(f) for f in rows[0]):
        start = 1
    data = []
    width = None
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not f.strip() for f in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(path, lineno, min(len(row), width) + 1, f"expected {width} fields, found {len(row)}")
        values = []
        for col, field in enumerate(row, start=1):
            try:
                x = float(field)
            except ValueError:
                raise ParseError(path, lineno, col, f"not a number: {field!r}") from None
            if not math.isfinite(x):
                raise ParseError(path, lineno, col, f"non-finite value: {field!r}")
            values.append(x)
        data.append(values)
    if not data:
        raise ParseError(path, max(len(rows), 1), 1, "no data rows")
    return np.array(data, dtype=np.float64)


def format_value(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    # repr is the shortest string that round-trips to the same double
    return repr(x)


def write_matrix(path, M, header=None) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    lines = []
    if header is not None:
        lines.append(",".join(header))
    lines.extend(",".join(format_value(x) for x in row) for row in M)
    Path(path).write_text("\n".join(lines) + "\n")


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, entries: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in entries.items()))


def read_manifest(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(path, lineno, 1, "expected key=value")
        out[key] = value
    return out
