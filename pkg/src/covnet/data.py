"""Immutable datasets and CSV ingestion.

A :class:`Dataset` holds one group's node matrix ``X`` (n x p) and covariate
matrix ``W`` (n x q). Groups are always materialized separately because every
estimator is fit per group. ``q = 0`` is legal and routes callers to the
unadjusted analysis.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyData, MalformedFile, NonFinite


class Group(enum.Enum):
    I = "I"
    II = "II"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Validated per-group data: nodes X (n x p) and covariates W (n x q)."""

    group: Group
    X: np.ndarray
    W: np.ndarray
    node_names: tuple[str, ...]
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = _freeze(np.atleast_2d(self.X))
        W = np.asarray(self.W, dtype=np.float64)
        if W.ndim == 1:
            W = W.reshape(len(W), 0) if W.size == 0 else W.reshape(-1, 1)
        W = _freeze(W)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "node_names", tuple(self.node_names))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        n, p = X.shape
        if n < 2:
            raise EmptyData(f"need at least 2 rows, got {n}")
        if p < 2:
            raise MalformedFile(f"need at least 2 node columns, got {p}")
        if W.shape[0] != n:
            raise MalformedFile(
                f"X has {n} rows but W has {W.shape[0]}"
            )
        if len(self.node_names) != p:
            raise MalformedFile("node_names length does not match X columns")
        if len(self.covariate_names) != W.shape[1]:
            raise MalformedFile("covariate_names length does not match W columns")
        if not np.isfinite(X).all() or not np.isfinite(W).all():
            raise NonFinite("dataset contains NaN or Inf entries")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class Schema:
    """Column mapping for CSV ingestion.

    ``node_columns`` and ``covariate_columns`` name the numeric columns. When
    ``group_column`` is set, only rows whose value in that column equals
    ``group_value`` are loaded (grouping via a column instead of per-file).
    """

    node_columns: tuple[str, ...]
    covariate_columns: tuple[str, ...] = ()
    group_column: str | None = None
    group_value: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "node_columns", tuple(self.node_columns))
        object.__setattr__(self, "covariate_columns", tuple(self.covariate_columns))
        if len(self.node_columns) < 2:
            raise MalformedFile("schema needs at least 2 node columns")
        overlap = set(self.node_columns) & set(self.covariate_columns)
        if overlap:
            raise MalformedFile(f"columns listed as both node and covariate: {sorted(overlap)}")
        if self.group_column is not None and self.group_value is None:
            raise MalformedFile("group_column requires group_value")


def _parse_cell(raw: str, row: int, col: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise MalformedFile(f"non-numeric cell {raw!r} at row {row}, column {col!r}") from None
    if not math.isfinite(value):
        raise NonFinite(f"non-finite cell {raw!r} at row {row}, column {col!r}")
    return value


def load_dataset(path, group: Group, schema: Schema) -> Dataset:
    """Load one group from a UTF-8, comma-separated, headered CSV.

    One sample per row; missing values are not supported. Row order is
    preserved. Raises MalformedFile on ragged rows or non-numeric cells,
    NonFinite on NaN/Inf, and EmptyData when fewer than 2 rows remain.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyData(f"{path}: empty file") from None
        index = {name: i for i, name in enumerate(header)}
        for col in (*schema.node_columns, *schema.covariate_columns):
            if col not in index:
                raise MalformedFile(f"{path}: missing column {col!r}")
        if schema.group_column is not None and schema.group_column not in index:
            raise MalformedFile(f"{path}: missing group column {schema.group_column!r}")

        node_idx = [index[c] for c in schema.node_columns]
        cov_idx = [index[c] for c in schema.covariate_columns]
        group_idx = index[schema.group_column] if schema.group_column else None

        x_rows: list[list[float]] = []
        w_rows: list[list[float]] = []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise MalformedFile(
                    f"{path}: ragged row {rownum} ({len(row)} cells, expected {len(header)})"
                )
            if group_idx is not None and row[group_idx] != schema.group_value:
                continue
            x_rows.append([_parse_cell(row[i], rownum, header[i]) for i in node_idx])
            w_rows.append([_parse_cell(row[i], rownum, header[i]) for i in cov_idx])

    if len(x_rows) < 2:
        raise EmptyData(f"{path}: {len(x_rows)} usable rows, need at least 2")
    X = np.array(x_rows, dtype=np.float64)
    W = np.array(w_rows, dtype=np.float64).reshape(len(x_rows), len(cov_idx))
    return Dataset(
        group=group,
        X=X,
        W=W,
        node_names=schema.node_columns,
        covariate_names=schema.covariate_columns,
    )


def write_dataset_csv(data: Dataset, path) -> None:
    """Write a Dataset back to CSV with round-trippable float formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*data.node_names, *data.covariate_names])
        for i in range(data.n):
            row = [repr(v) for v in data.X[i]]
            row += [repr(v) for v in data.W[i]]
            writer.writerow(row)
