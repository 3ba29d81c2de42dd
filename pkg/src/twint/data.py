"""Numeric CSV datasets."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["DataError", "Dataset", "fmt", "read_csv", "write_csv", "write_rows"]


class DataError(ValueError):
    """Malformed or invalid input data."""


def fmt(value) -> str:
    """15 significant digits, the fixed numeric output format."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.15g}"


@dataclass(frozen=True)
class Dataset:
    column_names: tuple[str, ...]
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        lengths = {len(self.columns[c]) for c in self.column_names}
        if len(lengths) > 1:
            raise DataError("columns have unequal lengths")
        for name in self.column_names:
            if not np.all(np.isfinite(self.columns[name])):
                raise DataError(f"column {name!r} contains non-finite values")

    @classmethod
    def from_arrays(cls, **cols) -> "Dataset":
        return cls(tuple(cols), {k: np.asarray(v, dtype=float) for k, v in cols.items()})

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.column_names[0]]) if self.column_names else 0

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"no column named {name!r} (have: {', '.join(self.column_names)})") from None

    def matrix(self, names) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])


def read_csv(path) -> Dataset:
    """Read a header-first numeric CSV; any bad cell raises with its position."""
    text = Path(path).read_text(encoding="utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = list(reader)
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or any(not h for h in header):
        raise DataError(f"{path}:1: header has empty column names")
    if len(set(header)) != len(header):
        raise DataError(f"{path}:1: duplicate column names")
    values: list[list[float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        parsed = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}:{lineno}:{col}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}:{lineno}:{col}: non-finite value {cell!r}")
            parsed.append(v)
        values.append(parsed)
    if not values:
        raise DataError(f"{path}: no data rows")
    arr = np.array(values)
    return Dataset(tuple(header), {h: arr[:, i].copy() for i, h in enumerate(header)})


def write_rows(path, header, rows) -> None:
    """Write header + rows with LF line endings and 15-digit numbers."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_csv(path, data: Dataset) -> None:
    cols = [data.columns[c] for c in data.column_names]
    write_rows(path, data.column_names, zip(*cols))
