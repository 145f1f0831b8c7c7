"""CSV ingestion for the estimation commands.

A dataset is rows of (marker value, binary disease label, optional
covariate) read from a UTF-8 CSV with a header row. Errors carry the
data row number (first data row is row 1) and the offending column, so
a bad cell can be found without re-running anything.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .densities import CovariateMap
from .errors import DataError

ARM_DISEASED = "diseased"
ARM_NON_DISEASED = "non-diseased"


@dataclass(frozen=True)
class Dataset:
    """Typed columns plus provenance and per-arm location/scale records."""

    y: np.ndarray
    d: np.ndarray                      # int, strictly 0/1
    x: np.ndarray | None
    source: str
    columns: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.y.shape != self.d.shape:
            raise DataError("y and d columns disagree in length")
        if self.x is not None and self.x.shape != self.y.shape:
            raise DataError("x column disagrees in length")

    @property
    def conditional(self) -> bool:
        return self.x is not None

    @property
    def n_diseased(self) -> int:
        return int(self.d.sum())

    @property
    def n_non_diseased(self) -> int:
        return int(self.d.size - self.d.sum())

    def arm(self, diseased: bool) -> tuple[np.ndarray, np.ndarray | None]:
        mask = self.d == (1 if diseased else 0)
        return self.y[mask], None if self.x is None else self.x[mask]

    def arm_records(self) -> dict:
        """Per-arm count, location, and scale on the original marker scale."""
        out = {}
        for label, diseased in ((ARM_DISEASED, True), (ARM_NON_DISEASED, False)):
            ys, _ = self.arm(diseased)
            out[label] = {
                "n": int(ys.size),
                "location": float(ys.mean()) if ys.size else math.nan,
                "scale": float(ys.std(ddof=1)) if ys.size > 1 else math.nan,
            }
        return out

    def covariate_map(self) -> CovariateMap:
        if self.x is None:
            raise DataError("dataset has no covariate column")
        lo, hi = float(self.x.min()), float(self.x.max())
        if lo == hi:
            raise DataError(f"covariate {self.columns.get('x')!r} is constant")
        return CovariateMap(lo, hi)


def _cell(row: dict, col: str) -> str:
    value = row.get(col)
    return "" if value is None else value.strip()


def _parse_float(cell: str, row_num: int, col: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"row {row_num}: {col!r} value {cell!r} is not a number") from None
    if not math.isfinite(value):
        raise DataError(f"row {row_num}: {col!r} value {cell!r} is not finite")
    return value


def parse_dataset(path, y_col: str, d_col: str, x_col: str | None = None) -> Dataset:
    """Read and type-check a CSV; data rows are numbered from 1."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataError(f"{path} is empty; expected a header row")
        for col in filter(None, (y_col, d_col, x_col)):
            if col not in header:
                raise DataError(f"column {col!r} not found in {path} (header: {header})")
        ys: list[float] = []
        ds: list[int] = []
        xs: list[float] = []
        missing_x_row = 0
        for row_num, row in enumerate(reader, start=1):
            ys.append(_parse_float(_cell(row, y_col), row_num, y_col))
            d_cell = _cell(row, d_col)
            d_val = _parse_float(d_cell, row_num, d_col)
            if d_val not in (0.0, 1.0):
                raise DataError(f"row {row_num}: {d_col!r} must be 0 or 1, got {d_cell!r}")
            ds.append(int(d_val))
            if x_col is None:
                continue
            x_cell = _cell(row, x_col)
            if not x_cell:
                missing_x_row = missing_x_row or row_num
                continue
            if missing_x_row:
                raise DataError(
                    f"covariate {x_col!r} must be all-or-none: "
                    f"row {missing_x_row} is empty but row {row_num} is not"
                )
            xs.append(_parse_float(x_cell, row_num, x_col))
    if not ys:
        raise DataError(f"{path} has a header but no data rows")
    if x_col is not None and xs and missing_x_row:
        raise DataError(
            f"covariate {x_col!r} must be all-or-none: row {missing_x_row} is empty"
        )
    if x_col is not None and not xs:
        raise DataError(f"column {x_col!r} is empty on every row; drop the flag instead")
    columns = {"y": y_col, "d": d_col, "x": x_col}
    return Dataset(
        y=np.asarray(ys, dtype=float),
        d=np.asarray(ds, dtype=np.int64),
        x=np.asarray(xs, dtype=float) if x_col is not None else None,
        source=str(path),
        columns=columns,
    )
