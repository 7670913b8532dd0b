"""Partially observed matrices: representation, validation, file formats.

A :class:`PartialMatrix` stores the observed values with unobserved positions
set to exactly zero, alongside the boolean revelation mask.  Consumers must
always consult the mask; a zero value never implies missingness on its own.

Two interchange formats are supported:

* ``dense-csv``: comma-separated, header-free; an empty cell or the literal
  ``NA`` marks an unobserved entry.
* ``coordinate-triplet``: a header line ``n d nnz`` followed by ``nnz``
  whitespace-separated ``row col value`` lines with 1-based indices; entries
  not listed are unobserved.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DataFormatError",
    "PartialMatrix",
    "RowIndexSets",
    "ScoreMatrix",
    "load_partial",
    "save_partial",
    "observed_fraction",
    "coobservation_counts",
    "row_index_sets",
]

FORMATS = ("dense-csv", "coordinate-triplet")


class DataFormatError(ValueError):
    """A matrix file could not be parsed."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PartialMatrix:
    """Observed entries of an n x d matrix together with the revelation mask.

    ``values[i, j]`` is the observed value where ``mask[i, j]`` is True and
    exactly 0.0 elsewhere.  Arrays are made read-only so instances can be
    shared freely across threads.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        if values.ndim != 2 or mask.shape != values.shape:
            raise ValueError(
                f"values and mask must be matching 2-d arrays, got "
                f"{values.shape} and {mask.shape}"
            )
        if not np.isfinite(values[mask]).all():
            raise ValueError("observed values contain non-finite entries")
        if np.any(values[~mask] != 0.0):
            raise ValueError(
                "values must be exactly 0 at unobserved positions; "
                "use PartialMatrix.from_dense to apply the mask"
            )
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "mask", _freeze(mask))

    @classmethod
    def from_dense(cls, values, mask) -> "PartialMatrix":
        """Build from a dense array, zeroing whatever the mask hides."""
        mask = np.asarray(mask, dtype=bool)
        values = np.where(mask, np.asarray(values, dtype=float), 0.0)
        return cls(values, mask)

    @classmethod
    def fully_observed(cls, values) -> "PartialMatrix":
        values = np.asarray(values, dtype=float)
        return cls.from_dense(values, np.ones(values.shape, dtype=bool))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def observed_counts(self) -> np.ndarray:
        """Number of observed entries in each row."""
        return self.mask.sum(axis=1)

    def restrict_rows(self, rows) -> "PartialMatrix":
        rows = np.asarray(rows, dtype=int)
        return PartialMatrix(self.values[rows].copy(), self.mask[rows].copy())


@dataclass(frozen=True)
class RowIndexSets:
    """Per-row sorted observed column indices and their complements."""

    observed: list = field(repr=False)
    missing: list = field(repr=False)


@dataclass(frozen=True)
class ScoreMatrix:
    """Estimated K-dimensional scores for the retained rows.

    ``scores[t]`` belongs to original row ``rows[t]``; rows dropped by the
    caller's retention rule are simply absent.
    """

    scores: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        scores = np.ascontiguousarray(self.scores, dtype=float)
        rows = np.ascontiguousarray(self.rows, dtype=int)
        if scores.ndim != 2 or rows.ndim != 1 or scores.shape[0] != rows.shape[0]:
            raise ValueError(
                f"scores ({scores.shape}) and rows ({rows.shape}) are inconsistent"
            )
        object.__setattr__(self, "scores", _freeze(scores))
        object.__setattr__(self, "rows", _freeze(rows))


def row_index_sets(pm: PartialMatrix) -> RowIndexSets:
    """Observed / unobserved column index sets for every row."""
    all_cols = np.arange(pm.d)
    observed = [np.flatnonzero(row) for row in pm.mask]
    missing = [all_cols[~row] for row in pm.mask]
    return RowIndexSets(observed, missing)


def observed_fraction(pm: PartialMatrix) -> float:
    """Proportion of revealed entries, in [0, 1]."""
    return float(pm.mask.sum()) / (pm.n * pm.d)


def coobservation_counts(pm: PartialMatrix) -> np.ndarray:
    """d x d matrix counting rows in which column pairs are jointly observed.

    Entry (j, k) is the number of rows where both columns j and k are
    revealed; the diagonal holds per-column observation counts.  This is the
    Gram matrix of the mask columns, hence symmetric positive semidefinite.
    """
    m = pm.mask.astype(float)
    counts = m.T @ m
    return np.rint(counts).astype(np.int64)


def load_partial(path, fmt: str = "dense-csv") -> PartialMatrix:
    """Read a partially observed matrix from ``path`` in the given format."""
    path = Path(path)
    if fmt == "dense-csv":
        return _load_dense_csv(path)
    if fmt == "coordinate-triplet":
        return _load_triplet(path)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def save_partial(pm: PartialMatrix, path, fmt: str = "dense-csv") -> None:
    """Write ``pm`` to ``path`` so that :func:`load_partial` round-trips it."""
    path = Path(path)
    if fmt == "dense-csv":
        _save_dense_csv(pm, path)
    elif fmt == "coordinate-triplet":
        _save_triplet(pm, path)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _parse_cell(cell: str, path: Path, lineno: int) -> tuple[float, bool]:
    cell = cell.strip()
    if cell == "" or cell == "NA":
        return 0.0, False
    try:
        return float(cell), True
    except ValueError:
        raise DataFormatError(
            f"{path}:{lineno}: cannot parse cell {cell!r} as a number"
        ) from None


def _load_dense_csv(path: Path) -> PartialMatrix:
    rows_values: list[list[float]] = []
    rows_mask: list[list[bool]] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue  # blank line
            vals, obs = zip(*(_parse_cell(c, path, lineno) for c in row))
            if rows_values and len(vals) != len(rows_values[0]):
                raise DataFormatError(
                    f"{path}:{lineno}: expected {len(rows_values[0])} columns, "
                    f"got {len(vals)}"
                )
            rows_values.append(list(vals))
            rows_mask.append(list(obs))
    if not rows_values:
        raise DataFormatError(f"{path}: file contains no rows")
    return PartialMatrix(np.array(rows_values), np.array(rows_mask))


def _save_dense_csv(pm: PartialMatrix, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        for vals, obs in zip(pm.values, pm.mask):
            fh.write(
                ",".join(f"{v:.17g}" if o else "NA" for v, o in zip(vals, obs))
            )
            fh.write("\n")


def _load_triplet(path: Path) -> PartialMatrix:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 3:
        raise DataFormatError(f"{path}:1: header must be 'n d nnz', got {lines[0]!r}")
    try:
        n, d, nnz = (int(tok) for tok in header)
    except ValueError:
        raise DataFormatError(
            f"{path}:1: header fields must be integers, got {lines[0]!r}"
        ) from None
    if n < 1 or d < 1 or nnz < 0:
        raise DataFormatError(f"{path}:1: invalid dimensions n={n} d={d} nnz={nnz}")
    values = np.zeros((n, d))
    mask = np.zeros((n, d), dtype=bool)
    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(body) != nnz:
        raise DataFormatError(
            f"{path}: header declares {nnz} entries but file has {len(body)}"
        )
    for lineno, line in body:
        tokens = line.split()
        if len(tokens) != 3:
            raise DataFormatError(
                f"{path}:{lineno}: expected 'row col value', got {line!r}"
            )
        try:
            i, j = int(tokens[0]), int(tokens[1])
            v = float(tokens[2])
        except ValueError:
            raise DataFormatError(
                f"{path}:{lineno}: cannot parse triplet {line!r}"
            ) from None
        if not (1 <= i <= n and 1 <= j <= d):
            raise DataFormatError(
                f"{path}:{lineno}: coordinate ({i}, {j}) outside 1-based "
                f"{n} x {d} bounds"
            )
        if mask[i - 1, j - 1]:
            raise DataFormatError(
                f"{path}:{lineno}: duplicate coordinate ({i}, {j})"
            )
        values[i - 1, j - 1] = v
        mask[i - 1, j - 1] = True
    return PartialMatrix(values, mask)


def _save_triplet(pm: PartialMatrix, path: Path) -> None:
    ii, jj = np.nonzero(pm.mask)
    with open(path, "w") as fh:
        fh.write(f"{pm.n} {pm.d} {len(ii)}\n")
        for i, j in zip(ii, jj):
            fh.write(f"{i + 1} {j + 1} {pm.values[i, j]:.17g}\n")
