"""Loading numeric text tables and the isotropic unit-box rescaling used for A3."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, UsageError


class ParseError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


FORMATS = ("whitespace", "csv")
_ALIASES = {"ws": "whitespace", "whitespace": "whitespace", "csv": "csv"}


@dataclass
class RawTable:
    rows: list
    path: str
    delimiter: str


def read_table(path, format: str = "whitespace") -> RawTable:
    """Parse one point per line; blank lines are skipped."""
    try:
        mode = _ALIASES[format]
    except KeyError:
        raise UsageError(f"unknown format {format!r}, expected one of {sorted(_ALIASES)}") from None
    path = Path(path)
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            fields = text.split(",") if mode == "csv" else text.split()
            try:
                row = [float(f) for f in fields]
            except ValueError:
                bad = next(f for f in fields if not _is_float(f))
                raise ParseError(path, lineno, f"non-numeric field {bad!r}") from None
            if not all(math.isfinite(v) for v in row):
                raise ParseError(path, lineno, "non-finite value")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(path, lineno, f"expected {width} fields, found {len(row)}")
            rows.append(row)
    if not rows:
        raise ParseError(path, 0, "no data rows")
    return RawTable(rows, str(path), mode)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_dataset(path, format: str = "whitespace") -> Dataset:
    """Load a table as-is; no normalization is applied."""
    return Dataset(np.array(read_table(path, format).rows, dtype=np.float64))


def unit_square_transform(data: Dataset) -> tuple[float, float]:
    """(shift, span) mapping the data into [0, 1]^d with one scalar for every axis."""
    lo = float(data.points.min())
    hi = float(data.points.max())
    if hi == lo:
        raise UsageError("cannot rescale a constant dataset")
    return lo, hi - lo


def apply_transform(points, shift: float, span: float) -> np.ndarray:
    return (np.asarray(points, dtype=np.float64) - shift) / span


def scale_to_unit_square(data: Dataset, reference: Dataset | None = None) -> Dataset:
    """Shift and scale uniformly so the global coordinate range becomes [0, 1].

    ``reference`` supplies the transform when rescaling something other than
    the data it was fitted on (e.g. ground-truth centroids).
    """
    shift, span = unit_square_transform(reference if reference is not None else data)
    return Dataset(apply_transform(data.points, shift, span))
