import numpy as np
import pytest

from causalcert.data import (
    CausalDataset,
    ColumnSchema,
    DataError,
    ParseError,
    SchemaError,
    arm_counts,
    export_csv,
    ingest_csv,
    oracle_csv_schema,
    split,
)
from causalcert.dgp import DgpSpec, generate


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


BASIC_SCHEMA = ColumnSchema(covariates=["x1", "x2"], treatment="t", outcome="y")


def test_ingest_basic(tmp_path):
    f = tmp_path / "d.csv"
    write_csv(f, ["x1", "x2", "t", "y"],
              [[0.1, 0.2, 1, 3.5], [0.3, -0.4, 0, 1.0], [1.0, 2.0, 1, -2.0]])
    ds = ingest_csv(f, BASIC_SCHEMA)
    assert (ds.n, ds.d) == (3, 2)
    assert not ds.has_oracle
    assert ds.y[0] == 3.5 and ds.t.tolist() == [1, 0, 1]


def test_ingest_with_oracle_and_sutva(tmp_path):
    f = tmp_path / "d.csv"
    schema = ColumnSchema(["x1"], "t", "y", y1="y1", y0="y0", propensity="ps")
    write_csv(f, ["x1", "t", "y", "y1", "y0", "ps"],
              [[0.0, 1, 2.0, 2.0, 1.0, 0.5], [1.0, 0, 0.5, 9.0, 0.5, 0.4]])
    ds = ingest_csv(f, schema)
    assert ds.has_oracle and ds.oracle(0).y1 == 2.0

    write_csv(f, ["x1", "t", "y", "y1", "y0", "ps"],
              [[0.0, 1, 2.0, 3.0, 1.0, 0.5]])  # y != y1 on a treated row
    with pytest.raises(DataError):
        ingest_csv(f, schema)


def test_ingest_missing_column_names_it(tmp_path):
    f = tmp_path / "d.csv"
    write_csv(f, ["x1", "t", "y"], [[0.0, 1, 2.0]])
    with pytest.raises(SchemaError, match="x2"):
        ingest_csv(f, BASIC_SCHEMA)


def test_ingest_partial_oracle_mapping_is_error(tmp_path):
    f = tmp_path / "d.csv"
    write_csv(f, ["x1", "t", "y", "y1"], [[0.0, 1, 2.0, 2.0]])
    schema = ColumnSchema(["x1"], "t", "y", y1="y1")
    with pytest.raises(SchemaError):
        ingest_csv(f, schema)


def test_ingest_nonbinary_treatment_reports_row(tmp_path):
    f = tmp_path / "d.csv"
    write_csv(f, ["x1", "x2", "t", "y"], [[0.0, 0.0, 1, 2.0], [0.0, 0.0, 2, 1.0]])
    with pytest.raises(ParseError, match="row 1"):
        ingest_csv(f, BASIC_SCHEMA)


def test_ingest_nonfinite_reports_row_and_column(tmp_path):
    f = tmp_path / "d.csv"
    write_csv(f, ["x1", "x2", "t", "y"], [[0.0, "nan", 1, 2.0]])
    with pytest.raises(ParseError, match="row 0.*x2"):
        ingest_csv(f, BASIC_SCHEMA)


def test_csv_round_trip_is_exact(tmp_path):
    ds = generate(DgpSpec(kind="observational", n=60, d=3, seed=5))
    f = tmp_path / "out.csv"
    export_csv(ds, f)
    back = ingest_csv(f, oracle_csv_schema(3))
    assert np.array_equal(back.X, ds.X)
    assert np.array_equal(back.t, ds.t)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.y1, ds.y1)
    assert np.array_equal(back.propensity, ds.propensity)


def test_dataset_invariants():
    with pytest.raises(DataError):
        CausalDataset(np.zeros((2, 2)), np.array([0, 2]), np.zeros(2))
    with pytest.raises(DataError):
        CausalDataset(np.array([[np.inf, 0.0]]), np.array([1]), np.zeros(1))
    with pytest.raises(SchemaError):
        CausalDataset(np.zeros((1, 1)), np.array([1]), np.zeros(1),
                      y1=np.zeros(1))  # partial oracle


def test_sutva_tolerance():
    X, t = np.zeros((1, 1)), np.array([1])
    y = np.array([1.0])
    y1 = np.array([1.0 + 5e-10])
    kw = dict(y1=y1, y0=np.zeros(1), propensity=np.array([0.5]))
    with pytest.raises(DataError):
        CausalDataset(X, t, y, sutva_atol=0.0, **kw)
    CausalDataset(X, t, y, sutva_atol=1e-9, **kw)  # ingestion default


def test_arm_counts_examples():
    ds = CausalDataset(np.zeros((4, 1)), np.array([1, 0, 1, 1]),
                       np.array([1.0, 2.0, 3.0, 4.0]))
    c = arm_counts(ds)
    assert (c.n, c.n_t1, c.n_t0, c.p_hat_t1) == (4, 3, 1, 0.75)

    all_treated = CausalDataset(np.zeros((2, 1)), np.ones(2), np.zeros(2))
    assert arm_counts(all_treated).n_t0 == 0


def test_split_partition_and_determinism():
    ds = generate(DgpSpec(kind="near_rct", n=100, d=2, seed=9))
    a, b = split(ds, 0.5, seed=7)
    assert a.n == 50 and b.n == 50
    a2, b2 = split(ds, 0.5, seed=7)
    assert np.array_equal(a.X, a2.X) and np.array_equal(b.y, b2.y)
    # partition: multiset of outcomes matches
    merged = np.sort(np.concatenate([a.y, b.y]))
    assert np.array_equal(merged, np.sort(ds.y))
    # a different seed gives a different partition
    a3, _ = split(ds, 0.5, seed=8)
    assert not np.array_equal(a.y, a3.y)


def test_split_degenerate_arm_guard():
    ds = CausalDataset(np.zeros((2, 1)), np.array([1, 0]), np.zeros(2))
    with pytest.raises(DataError):
        split(ds, 0.5, seed=0)


def test_split_fraction_validation():
    ds = generate(DgpSpec(kind="near_rct", n=20, d=1, seed=0))
    for bad in (0.0, 1.0, -0.5):
        with pytest.raises(DataError):
            split(ds, bad, seed=0)


def test_dataset_is_immutable():
    ds = generate(DgpSpec(kind="near_rct", n=10, d=1, seed=0))
    with pytest.raises(ValueError):
        ds.X[0, 0] = 99.0
