import math

import numpy as np
import pytest

from causalcert.data import CausalDataset, DataError
from causalcert.dgp import DgpSpec, generate
from causalcert.learners import fit_classifier
from causalcert.weights import (
    balance_term,
    build_constant,
    build_ipw,
    parse_weight,
)


class FixedProba:
    """Classifier stub returning a fixed per-row probability of t=1."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def predict_proba(self, X):
        n = np.atleast_2d(X).shape[0]
        return self.values[:n] if self.values.size >= n else np.resize(self.values, n)


def two_point_arm_dataset():
    # two treated rows with raw weights (1, 3) once p_hat / e is applied
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    t = np.array([1, 1, 0, 0])
    y = np.zeros(4)
    e = np.array([0.5, 0.5 / 3.0, 0.5, 0.5])  # p_hat = 0.5
    return CausalDataset(X, t, y), FixedProba(e)


def test_constant_weight_properties():
    w = build_constant()
    X = np.random.default_rng(0).standard_normal((10, 3))
    assert np.all(w(X) == 1.0)
    assert w.w_max == 1.0 and w.m_hat == 1.0
    assert not w.positivity_violated


def test_ipw_normalization_two_point_example():
    ds, clf = two_point_arm_dataset()
    w = build_ipw(clf, arm=1, ds=ds, clip_eps=0.0)
    vals = w(ds.X[:2])
    assert vals == pytest.approx([0.5, 1.5], abs=1e-12)
    assert w.m_hat == pytest.approx(2.0)
    assert w.w_max == pytest.approx(1.5)


def test_ipw_arm_mean_is_one():
    ds = generate(DgpSpec(kind="observational", n=1500, d=3, seed=6))
    clf = fit_classifier("logistic:l2=1.0", ds.X, ds.t.astype(float))
    for arm in (0, 1):
        w = build_ipw(clf, arm, ds, clip_eps=0.01)
        arm_vals = w(ds.X[ds.arm_mask(arm)])
        assert float(np.mean(arm_vals)) == pytest.approx(1.0, abs=1e-10)
        assert np.all(arm_vals >= 0.0)
        assert w.w_max == pytest.approx(float(np.max(arm_vals)))


def test_ipw_perfect_rct_classifier_gives_unit_weights():
    rng = np.random.default_rng(9)
    n = 800
    t = (rng.uniform(size=n) < 0.4).astype(int)
    ds = CausalDataset(rng.standard_normal((n, 2)), t, np.zeros(n))
    p_hat = float(np.mean(t))
    w = build_ipw(FixedProba(np.full(n, p_hat)), 1, ds)
    assert np.allclose(w(ds.X), 1.0)
    assert w.w_max == pytest.approx(1.0)


def test_ipw_clipping_arithmetic():
    # e = 0.01 clipped at 0.05 with p_hat = 0.5 gives raw weight 10
    n = 10
    t = np.array([1, 0] * 5)
    ds = CausalDataset(np.zeros((n, 1)), t, np.zeros(n))
    e = np.full(n, 0.01)
    w = build_ipw(FixedProba(e), 1, ds, clip_eps=0.05)
    raw = w(ds.X) * w.m_hat
    assert raw == pytest.approx(np.full(n, 10.0))


def test_ipw_zero_propensity_flags_positivity():
    n = 6
    t = np.array([1, 1, 1, 0, 0, 0])
    ds = CausalDataset(np.zeros((n, 1)), t, np.zeros(n))
    e = np.array([0.0, 0.5, 0.5, 0.5, 0.5, 0.5])
    w = build_ipw(FixedProba(e), 1, ds, clip_eps=0.0)
    assert w.positivity_violated
    assert math.isinf(w.w_max)


def test_ipw_validation():
    ds, clf = two_point_arm_dataset()
    with pytest.raises(DataError):
        build_ipw(clf, 2, ds)
    with pytest.raises(DataError):
        build_ipw(clf, 1, ds, clip_eps=0.7)
    all_treated = CausalDataset(np.zeros((3, 1)), np.ones(3), np.zeros(3))
    with pytest.raises(DataError):
        build_ipw(clf, 1, all_treated)


def test_balance_term_rct_example():
    # balanced arms, w == 1, p_hat = 0.5: every row contributes exactly 1
    n = 100
    t = np.array([1, 0] * 50)
    ds = CausalDataset(np.zeros((n, 1)), t, np.zeros(n))
    assert balance_term(build_constant(), ds, 1) == pytest.approx(1.0)
    assert balance_term(build_constant(), ds, 0) == pytest.approx(1.0)


def test_balance_term_degenerate_single_arm():
    ds = CausalDataset(np.zeros((4, 1)), np.ones(4), np.zeros(4))
    # p_hat = 1 and w = 1: every term is (1 - 1)^2 = 0
    assert balance_term(build_constant(), ds, 1) == 0.0
    with pytest.raises(DataError):
        balance_term(build_constant(), ds, 0)


def test_balance_term_recomputed_not_cached():
    ds, clf = two_point_arm_dataset()
    w = build_ipw(clf, 1, ds)
    first = balance_term(w, ds, 1)
    # evaluating twice is pure
    assert first == balance_term(w, ds, 1)
    # a weight function with a different spread changes the term
    other = build_ipw(FixedProba(clf.values ** 2), 1, ds)
    assert balance_term(other, ds, 1) != first
    # uniform rescaling of the propensities is absorbed by normalization
    rescaled = build_ipw(FixedProba(clf.values / 2.0), 1, ds)
    assert balance_term(rescaled, ds, 1) == pytest.approx(first)


def test_parse_weight_specs():
    ds = generate(DgpSpec(kind="observational", n=600, d=2, seed=8))
    w1 = parse_weight("one")
    assert w1.kind == "constant_one"
    w2 = parse_weight("ipw:clf=logistic:l2=1.0,clip=0.02", ds, arm=1)
    assert w2.kind == "inverse_propensity" and w2.clip_eps == 0.02
    # nested learner options keep their commas
    w3 = parse_weight("ipw:clf=treeclf:depth=3,leaf=10,clip=0.05", ds, arm=0)
    assert w3.clip_eps == 0.05
    with pytest.raises(DataError):
        parse_weight("bogus")
    with pytest.raises(DataError):
        parse_weight("ipw:clip=0.1", ds)
