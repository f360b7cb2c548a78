"""In-memory data model for multivariate series plus CSV ingestion.

Values are immutable after construction and safe to share across workers.
CSV files are comma-separated UTF-8 with a required header row, '.' decimal
separator and no thousands separators; floats are written with 17 significant
digits so a save/load round trip is bit exact.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyFileError,
    NonNumericCellError,
    ParseError,
    RaggedRowsError,
    TooFewRowsError,
)

#: First-column names treated as a time index and dropped by default.
TIME_COLUMN_NAMES = ("date", "time", "t")

MIN_ROWS = 8


class ConstantColumnWarning(UserWarning):
    """Emitted when ingestion or standardization meets a constant column."""


@dataclass(frozen=True)
class IngestOptions:
    """CSV ingestion policy.

    impute: "reject" (default) fails on missing/non-finite cells, "linear"
    interpolates them per column. keep_time_col retains a leading
    date/time/t column (it must then be numeric).
    """

    impute: str = "reject"
    keep_time_col: bool = False

    def __post_init__(self):
        if self.impute not in ("reject", "linear"):
            raise ValueError(f"unknown impute policy {self.impute!r}")


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """n x d panel of real observations with unique column names."""

    values: np.ndarray
    var_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if values.shape[1] != len(self.var_names):
            raise ValueError("var_names length must match column count")
        if len(set(self.var_names)) != len(self.var_names):
            raise ValueError("var_names must be unique")
        if any(not name for name in self.var_names):
            raise ValueError("var_names must be non-empty strings")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite (no NaN/Inf)")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "var_names", tuple(self.var_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, key: int | str) -> np.ndarray:
        if isinstance(key, str):
            key = self.var_names.index(key)
        return self.values[:, key]


@dataclass(frozen=True)
class StandardizeParams:
    """Per-column transform parameters, sufficient to invert standardize."""

    mean: np.ndarray
    std: np.ndarray
    constant_mask: np.ndarray = field(repr=False)


def _parse_cell(raw: str, row: int, col: int) -> float:
    text = raw.strip()
    if text == "":
        return np.nan
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCellError(f"cell {raw!r} is not a number", row=row, col=col) from None
    # textual nan/inf count as missing, subject to the impute policy
    if not np.isfinite(value):
        return np.nan
    return value


def load_csv(path: str | Path, options: IngestOptions = IngestOptions()) -> TimeSeriesMatrix:
    """Read a CSV file into a TimeSeriesMatrix.

    Columns keep file order. A first column named date/time/t (case
    insensitive) is dropped unless options.keep_time_col; the pipeline uses
    the integer index 0..n-1 as its time variable. Constant columns are
    reported through a ConstantColumnWarning.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFileError(f"{path} is empty") from None
        header = [name.strip() for name in header]
        if not header or all(name == "" for name in header):
            raise EmptyFileError(f"{path} has no header")

        drop_first = (
            not options.keep_time_col
            and header[0].lower() in TIME_COLUMN_NAMES
            and len(header) > 1
        )
        names = header[1:] if drop_first else header
        if any(name == "" for name in names):
            raise ParseError("header contains an empty column name", row=1)

        rows: list[list[float]] = []
        for lineno, raw_row in enumerate(reader, start=2):
            if not raw_row:
                continue
            if len(raw_row) != len(header):
                raise RaggedRowsError(
                    f"expected {len(header)} cells, found {len(raw_row)}", row=lineno
                )
            cells = raw_row[1:] if drop_first else raw_row
            offset = 2 if drop_first else 1
            rows.append(
                [_parse_cell(cell, lineno, ci + offset) for ci, cell in enumerate(cells)]
            )

    if len(rows) < MIN_ROWS:
        raise TooFewRowsError(f"{path} has {len(rows)} data rows, need at least {MIN_ROWS}")

    values = np.asarray(rows, dtype=np.float64)
    missing = ~np.isfinite(values)
    if missing.any():
        if options.impute == "reject":
            r, c = np.argwhere(missing)[0]
            raise NonNumericCellError(
                "missing or non-finite cell (use impute='linear' to interpolate)",
                row=int(r) + 2,
                col=int(c) + (2 if drop_first else 1),
            )
        for j in range(values.shape[1]):
            bad = missing[:, j]
            if not bad.any():
                continue
            if bad.all():
                raise ParseError(f"column {names[j]!r} has no numeric values", col=j + 1)
            idx = np.arange(values.shape[0])
            values[bad, j] = np.interp(idx[bad], idx[~bad], values[~bad, j])

    for j in range(values.shape[1]):
        if np.ptp(values[:, j]) == 0.0:
            warnings.warn(f"column {names[j]!r} is constant", ConstantColumnWarning, stacklevel=2)

    return TimeSeriesMatrix(values=values, var_names=tuple(names))


def save_csv(matrix: TimeSeriesMatrix, path: str | Path) -> None:
    """Write a TimeSeriesMatrix as CSV with 17-significant-digit floats."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(matrix.var_names)
        for row in matrix.values:
            writer.writerow([f"{v:.17g}" for v in row])


def standardize(x: TimeSeriesMatrix) -> tuple[TimeSeriesMatrix, StandardizeParams]:
    """Columnwise (x - mean) / std with ddof=1.

    Constant columns are passed through unchanged and flagged via
    ConstantColumnWarning; their std is recorded as 1 so the transform
    stays invertible.
    """
    values = x.values
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1)
    constant = std == 0.0
    for j in np.nonzero(constant)[0]:
        warnings.warn(
            f"column {x.var_names[j]!r} is constant; left unstandardized",
            ConstantColumnWarning,
            stacklevel=2,
        )
    safe_std = np.where(constant, 1.0, std)
    out_mean = np.where(constant, 0.0, mean)
    out = (values - out_mean) / safe_std
    params = StandardizeParams(mean=out_mean, std=safe_std, constant_mask=constant)
    return TimeSeriesMatrix(values=out, var_names=x.var_names), params


def unstandardize(x: TimeSeriesMatrix, params: StandardizeParams) -> TimeSeriesMatrix:
    """Invert standardize using the returned parameters."""
    return TimeSeriesMatrix(values=x.values * params.std + params.mean, var_names=x.var_names)


def standardize_series(y: np.ndarray) -> np.ndarray:
    """Standardize a single series; constant input is only de-meaned."""
    y = np.asarray(y, dtype=np.float64)
    sd = y.std(ddof=1) if y.size > 1 else 0.0
    if sd == 0.0:
        return y - y.mean()
    return (y - y.mean()) / sd
