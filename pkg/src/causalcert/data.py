"""Causal datasets: covariates, a binary treatment and an outcome, plus
optional oracle fields (both potential outcomes and the true treatment
propensity) that only synthetic generators can fill in.

Storage is columnar numpy; rows can be materialized as small records when
needed. Datasets are immutable after construction and safe to share.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

FLOAT_FORMAT = "%.17g"  # lossless round-trip through CSV


class DataError(ValueError):
    """Invalid dataset contents (domain violations, degenerate splits)."""


class SchemaError(DataError):
    """A required column is missing or the column mapping is inconsistent."""


class ParseError(DataError):
    """A cell failed to parse; carries row/column context in the message."""


@dataclass(frozen=True)
class ObservedSample:
    """One observed row: covariates x, treatment t in {0, 1}, outcome y."""

    x: np.ndarray
    t: int
    y: float


@dataclass(frozen=True)
class OracleFields:
    """Unobservable ground truth for one row.

    ``true_propensity`` is the probability of treatment given everything
    relevant, including any hidden confounder.
    """

    y1: float
    y0: float
    true_propensity: float


class CausalDataset:
    """Immutable columnar dataset with optional oracle columns.

    Consistency of observed and potential outcomes (the observed y equals
    y1 on treated rows and y0 on control rows) is enforced at construction
    up to ``sutva_atol``; synthetic generators use an exact check.
    """

    def __init__(
        self,
        X: np.ndarray,
        t: np.ndarray,
        y: np.ndarray,
        y1: np.ndarray | None = None,
        y0: np.ndarray | None = None,
        propensity: np.ndarray | None = None,
        sutva_atol: float = 0.0,
    ) -> None:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t = np.asarray(t)
        y = np.asarray(y, dtype=float)
        n = X.shape[0]
        if t.shape != (n,) or y.shape != (n,):
            raise DataError("X, t and y must agree on the number of rows")
        if n == 0:
            raise DataError("dataset must contain at least one row")
        if not np.all(np.isfinite(X)):
            raise DataError("covariates must be finite")
        if not np.all(np.isfinite(y)):
            raise DataError("outcomes must be finite")
        tf = t.astype(float)
        if not np.all((tf == 0.0) | (tf == 1.0)):
            raise DataError("treatment values must be 0 or 1")
        self.X = X
        self.t = tf.astype(np.int64)
        self.y = y

        oracle_parts = (y1, y0, propensity)
        given = [p is not None for p in oracle_parts]
        if any(given) and not all(given):
            raise SchemaError(
                "oracle fields y1, y0 and propensity must be given together"
            )
        if all(given):
            y1 = np.asarray(y1, dtype=float)
            y0 = np.asarray(y0, dtype=float)
            ps = np.asarray(propensity, dtype=float)
            for name, col in (("y1", y1), ("y0", y0), ("propensity", ps)):
                if col.shape != (n,):
                    raise DataError(f"oracle column {name} has wrong length")
                if not np.all(np.isfinite(col)):
                    raise DataError(f"oracle column {name} must be finite")
            if np.any((ps < 0.0) | (ps > 1.0)):
                raise DataError("true propensities must lie in [0, 1]")
            expected = np.where(self.t == 1, y1, y0)
            bad = np.abs(y - expected) > sutva_atol
            if np.any(bad):
                i = int(np.argmax(bad))
                raise DataError(
                    f"row {i}: observed outcome {y[i]!r} does not match the "
                    f"potential outcome of the received treatment {expected[i]!r}"
                )
            self.y1, self.y0, self.propensity = y1, y0, ps
        else:
            self.y1 = self.y0 = self.propensity = None

        for arr in (self.X, self.t, self.y, self.y1, self.y0, self.propensity):
            if arr is not None:
                arr.setflags(write=False)

    # -- basic accessors -----------------------------------------------------

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def has_oracle(self) -> bool:
        return self.y1 is not None

    def sample(self, i: int) -> ObservedSample:
        return ObservedSample(x=self.X[i], t=int(self.t[i]), y=float(self.y[i]))

    def oracle(self, i: int) -> OracleFields:
        if not self.has_oracle:
            raise DataError("dataset carries no oracle fields")
        return OracleFields(
            y1=float(self.y1[i]),
            y0=float(self.y0[i]),
            true_propensity=float(self.propensity[i]),
        )

    def arm_mask(self, arm: int) -> np.ndarray:
        if arm not in (0, 1):
            raise DataError("arm must be 0 or 1")
        return self.t == arm

    def subset(self, idx: np.ndarray) -> "CausalDataset":
        idx = np.asarray(idx)
        kw = {}
        if self.has_oracle:
            kw = dict(
                y1=self.y1[idx], y0=self.y0[idx], propensity=self.propensity[idx]
            )
        return CausalDataset(self.X[idx], self.t[idx], self.y[idx], **kw)


@dataclass(frozen=True)
class ArmCounts:
    n: int
    n_t1: int
    n_t0: int
    p_hat_t1: float


def arm_counts(ds: CausalDataset) -> ArmCounts:
    """Sample sizes per arm and the sample mean of the treatment."""
    n = ds.n
    n1 = int(np.sum(ds.t == 1))
    return ArmCounts(n=n, n_t1=n1, n_t0=n - n1, p_hat_t1=n1 / n)


def split(
    ds: CausalDataset, fraction: float, seed: int
) -> tuple[CausalDataset, CausalDataset]:
    """Deterministic two-way partition of a dataset.

    Both parts must contain at least one treated and one control row;
    otherwise a DataError is raised (every downstream learner needs both
    arms).
    """
    if not 0.0 < fraction < 1.0:
        raise DataError("fraction must lie strictly between 0 and 1")
    n = ds.n
    n_a = int(round(fraction * n))
    if n_a == 0 or n_a == n:
        raise DataError("split fraction leaves one part empty")
    perm = np.random.default_rng(seed).permutation(n)
    idx_a = np.sort(perm[:n_a])
    idx_b = np.sort(perm[n_a:])
    part_a, part_b = ds.subset(idx_a), ds.subset(idx_b)
    for name, part in (("first", part_a), ("second", part_b)):
        counts = arm_counts(part)
        if counts.n_t1 == 0 or counts.n_t0 == 0:
            raise DataError(
                f"degenerate split: the {name} part lacks a treatment arm"
            )
    return part_a, part_b


# -- CSV ingestion and export -------------------------------------------------


@dataclass(frozen=True)
class ColumnSchema:
    """Column mapping for CSV ingestion.

    Oracle columns (y1, y0, propensity) must be mapped all together or not
    at all; a partial mapping is a schema error.
    """

    covariates: Sequence[str]
    treatment: str
    outcome: str
    y1: str | None = None
    y0: str | None = None
    propensity: str | None = None

    def oracle_columns(self) -> tuple[str, str, str] | None:
        given = [c is not None for c in (self.y1, self.y0, self.propensity)]
        if any(given) and not all(given):
            raise SchemaError(
                "oracle columns y1, y0 and propensity must be mapped together"
            )
        if all(given):
            return (self.y1, self.y0, self.propensity)
        return None


def oracle_csv_schema(d: int) -> ColumnSchema:
    """Schema of the canonical export format (x1..xd, t, y, y1, y0, ps)."""
    return ColumnSchema(
        covariates=[f"x{j + 1}" for j in range(d)],
        treatment="t",
        outcome="y",
        y1="y1",
        y0="y0",
        propensity="ps",
    )


def observed_csv_schema(d: int) -> ColumnSchema:
    return ColumnSchema(
        covariates=[f"x{j + 1}" for j in range(d)], treatment="t", outcome="y"
    )


def _parse_cell(raw: str, row: int, col: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: cannot parse {raw!r}")
    if not math.isfinite(v):
        raise ParseError(f"row {row}, column {col!r}: non-finite value {raw!r}")
    return v


def ingest_csv(
    path, schema: ColumnSchema, sutva_atol: float = 1e-9
) -> CausalDataset:
    """Read a dataset from a headered CSV file under a column mapping."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file")
        rows = list(reader)

    index = {name: i for i, name in enumerate(header)}
    oracle_cols = schema.oracle_columns()
    needed = list(schema.covariates) + [schema.treatment, schema.outcome]
    if oracle_cols:
        needed += list(oracle_cols)
    for col in needed:
        if col not in index:
            raise SchemaError(f"missing column {col!r}")

    n, d = len(rows), len(schema.covariates)
    if n == 0:
        raise DataError(f"{path}: no data rows")
    X = np.empty((n, d))
    t = np.empty(n, dtype=np.int64)
    y = np.empty(n)
    oracle = (
        {name: np.empty(n) for name in ("y1", "y0", "ps")} if oracle_cols else None
    )
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"row {i}: expected {len(header)} cells, got {len(row)}")
        for j, col in enumerate(schema.covariates):
            X[i, j] = _parse_cell(row[index[col]], i, col)
        tv = _parse_cell(row[index[schema.treatment]], i, schema.treatment)
        if tv not in (0.0, 1.0):
            raise ParseError(
                f"row {i}, column {schema.treatment!r}: treatment must be 0 or 1, "
                f"got {row[index[schema.treatment]]!r}"
            )
        t[i] = int(tv)
        y[i] = _parse_cell(row[index[schema.outcome]], i, schema.outcome)
        if oracle is not None:
            for name, col in zip(("y1", "y0", "ps"), oracle_cols):
                oracle[name][i] = _parse_cell(row[index[col]], i, col)

    kw = {}
    if oracle is not None:
        kw = dict(y1=oracle["y1"], y0=oracle["y0"], propensity=oracle["ps"])
    return CausalDataset(X, t, y, sutva_atol=sutva_atol, **kw)


def export_csv(ds: CausalDataset, path) -> None:
    """Write a dataset in the canonical column layout.

    Floats are serialized with 17 significant digits so that a round trip
    through ingest_csv reproduces the values exactly.
    """
    header = [f"x{j + 1}" for j in range(ds.d)] + ["t", "y"]
    if ds.has_oracle:
        header += ["y1", "y0", "ps"]
    fmt = lambda v: FLOAT_FORMAT % v
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            row = [fmt(v) for v in ds.X[i]] + [str(int(ds.t[i])), fmt(ds.y[i])]
            if ds.has_oracle:
                row += [fmt(ds.y1[i]), fmt(ds.y0[i]), fmt(ds.propensity[i])]
            writer.writerow(row)
