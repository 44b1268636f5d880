"""CSV readers and writers for data, scheme, matrix and edge files.

Variables are numbered from 1 in every file.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .truncdist import TruncationScheme

FLOAT_FMT = "{:.17g}"


def _parse_float(text: str, path, lineno: int, col: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: column {col + 1}: cannot parse {text!r} as a number") from None
    if not np.isfinite(v):
        raise ValidationError(f"{path}:{lineno}: column {col + 1}: non-finite value {text!r}")
    return v


def _looks_numeric(row) -> bool:
    try:
        [float(x) for x in row]
    except ValueError:
        return False
    return True


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV with an optional header row; blank lines are skipped."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and not _looks_numeric(row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValidationError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
            rows.append([_parse_float(c, path, lineno, i) for i, c in enumerate(row)])
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, m: np.ndarray, header: list[str] | None = None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in np.atleast_2d(m):
            w.writerow([FLOAT_FMT.format(v) for v in row])


def read_scheme_csv(path) -> TruncationScheme:
    """Scheme file with header ``index,a,b`` and one row per variable."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["index", "a", "b"]:
            raise ValidationError(f"{path}:1: expected header 'index,a,b', found {header}")
        entries = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 fields, found {len(row)}")
            idx = _parse_float(row[0], path, lineno, 0)
            if idx != int(idx) or idx < 1:
                raise ValidationError(f"{path}:{lineno}: index must be a positive integer")
            if int(idx) in entries:
                raise ValidationError(f"{path}:{lineno}: duplicate index {int(idx)}")
            a = _parse_float(row[1], path, lineno, 1)
            b = _parse_float(row[2], path, lineno, 2)
            if a >= b:
                raise ValidationError(f"{path}:{lineno}: need a < b, got a={a}, b={b}")
            entries[int(idx)] = (a, b)
    p = len(entries)
    if sorted(entries) != list(range(1, p + 1)):
        raise ValidationError(f"{path}: indices must be exactly 1..{p}")
    ab = np.array([entries[i] for i in range(1, p + 1)])
    return TruncationScheme(ab[:, 0], ab[:, 1])


def write_scheme_csv(path, scheme: TruncationScheme):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "a", "b"])
        for i, (a, b) in enumerate(zip(scheme.lower, scheme.upper), start=1):
            w.writerow([i, FLOAT_FMT.format(a), FLOAT_FMT.format(b)])


def write_edges_csv(path, edges, weights: np.ndarray | None = None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k"] + (["weight"] if weights is not None else []))
        for j, k in sorted(edges):
            row = [j + 1, k + 1]
            if weights is not None:
                row.append(FLOAT_FMT.format(weights[j, k]))
            w.writerow(row)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
