"""Numeric tabular data: loading, validation, summaries and correlations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd


class TableError(ValueError):
    """Raised when a table cannot be built, loaded or summarized."""


@dataclass(frozen=True, eq=False)
class DataTable:
    """Immutable numeric table with named columns.

    Attributes:
        name: Identifier of the table (usually the CSV file name)
        columns: Ordered variable names
        values: n x c float array, read-only
    """

    name: str
    columns: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        columns = tuple(self.columns)
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise TableError(f"table '{self.name}' must be two-dimensional")
        if not columns:
            raise TableError(f"table '{self.name}' has no columns")
        if values.shape[0] < 1:
            raise TableError(f"table '{self.name}' has no rows")
        if values.shape[1] != len(columns):
            raise TableError(
                f"table '{self.name}' has {len(columns)} column names for {values.shape[1]} columns"
            )
        seen = set()
        for column in columns:
            if not column or not column.strip():
                raise TableError(f"table '{self.name}' has an empty column name")
            if column in seen:
                raise TableError(f"table '{self.name}' has duplicate column name '{column}'")
            seen.add(column)
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise TableError(
                f"table '{self.name}' has a non-finite value at row {row + 1}, column {columns[col]}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        """Row count."""
        return self.values.shape[0]

    @property
    def c(self) -> int:
        """Column count."""
        return self.values.shape[1]

    def index(self, name: str) -> int:
        """Position of a column.

        Raises:
            TableError: If the column does not exist
        """
        try:
            return self._positions[name]
        except KeyError:
            raise TableError(f"unknown variable '{name}' in table '{self.name}'") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def select(self, names: Sequence[str]) -> "DataTable":
        """Project the table onto a subset of columns, in the given order."""
        if not names:
            raise TableError("cannot select an empty set of columns")
        positions = [self.index(name) for name in names]
        return DataTable(self.name, tuple(names), self.values[:, positions])

    def rename(self, mapping: Mapping[str, str], name: str | None = None) -> "DataTable":
        """Return a copy with columns renamed; names missing from the mapping are kept."""
        columns = tuple(mapping.get(column, column) for column in self.columns)
        return DataTable(name or self.name, columns, self.values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, columns=list(self.columns))

    @cached_property
    def correlation(self) -> "CorrelationMatrix":
        """Correlation matrix, computed once per table."""
        return correlation_matrix(self)

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {column: i for i, column in enumerate(self.columns)}


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric Pearson correlation matrix over named variables."""

    variables: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "values", values)

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise TableError(f"unknown variable '{name}'") from None

    def get(self, x: str, y: str) -> float:
        return float(self.values[self.index(x), self.index(y)])

    def submatrix(self, names: Sequence[str]) -> np.ndarray:
        positions = [self.index(name) for name in names]
        return self.values[np.ix_(positions, positions)]


def _parse_cell(text: str, row: int, column: str, path: Path) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TableError(
            f"{path}: non-numeric value '{text}' at row {row}, column {column}"
        ) from None
    if not math.isfinite(value):
        raise TableError(f"{path}: non-finite value '{text}' at row {row}, column {column}")
    return value


def load_csv(path: str | Path, name: str | None = None) -> DataTable:
    """Load a numeric CSV file with a mandatory header row.

    Args:
        path: CSV file path
        name: Table name (default: the file name)

    Returns:
        DataTable with columns in header order

    Raises:
        TableError: On a missing file, duplicate or empty header names, empty tables
            and non-numeric cells (reported with 1-based data row and column name)
    """
    path = Path(path)
    if not path.is_file():
        raise TableError(f"file not found: {path}")

    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            header=None,
            skipinitialspace=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise TableError(f"{path}: empty table") from None
    except pd.errors.ParserError as e:
        raise TableError(f"{path}: malformed CSV ({e})") from None

    header = [str(cell).strip() for cell in frame.iloc[0].tolist()]
    seen = set()
    for column in header:
        if not column:
            raise TableError(f"{path}: empty column name in header")
        if column in seen:
            raise TableError(f"{path}: duplicate column name '{column}'")
        seen.add(column)

    body = frame.iloc[1:]
    if body.empty:
        raise TableError(f"{path}: empty table (header only)")

    values = np.empty(body.shape, dtype=float)
    for i, record in enumerate(body.itertuples(index=False), start=1):
        for j, cell in enumerate(record):
            values[i - 1, j] = _parse_cell(str(cell).strip(), i, header[j], path)

    return DataTable(name or path.name, tuple(header), values)


def write_csv(table: DataTable, path: str | Path) -> Path:
    """Write a table as CSV with round-trip float precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [[repr(float(v)) for v in row] for row in table.values],
        columns=list(table.columns),
    )
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def correlation_matrix(table: DataTable) -> CorrelationMatrix:
    """Pearson correlation matrix with a two-pass mean-then-covariance computation.

    Raises:
        TableError: If n < 2 or a column is constant
    """
    if table.n < 2:
        raise TableError(f"table '{table.name}' needs at least 2 rows for correlations")

    centered = table.values - table.values.mean(axis=0)
    sums = np.einsum("ij,ij->j", centered, centered)
    for column, ss in zip(table.columns, sums):
        if ss <= 0.0:
            raise TableError(f"column '{column}' in table '{table.name}' has zero variance")

    scale = np.sqrt(sums)
    values = (centered.T @ centered) / np.outer(scale, scale)
    values = (values + values.T) / 2.0
    np.clip(values, -1.0, 1.0, out=values)
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix(table.columns, values)


def from_columns(name: str, columns: Mapping[str, Iterable[float]]) -> DataTable:
    """Build a table from a name -> values mapping (insertion order kept)."""
    names = tuple(columns)
    return DataTable(name, names, np.column_stack([np.asarray(list(columns[c]), dtype=float) for c in names]))
