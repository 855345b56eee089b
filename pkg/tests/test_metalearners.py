import numpy as np
import pytest

from causalcert.data import CausalDataset, DataError
from causalcert.dgp import DgpSpec, generate
from causalcert.losses import parse_loss
from causalcert.metalearners import (
    fit_metalearner,
    fit_s_learner,
    fit_t_learner,
    fit_x_learner,
    parse_metalearner,
)
from causalcert.weights import build_constant

SQUARED = parse_loss("squared")
ONES = build_constant()


def linear_effect_dataset(n=600, seed=0, noise=0.0):
    # y1 = x1, y0 = 0: the effect is exactly x1
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    t = (rng.uniform(size=n) < 0.5).astype(int)
    y1 = X[:, 0] + noise * rng.standard_normal(n)
    y0 = np.zeros(n) + noise * rng.standard_normal(n)
    y = np.where(t == 1, y1, y0)
    return CausalDataset(X, t, y, y1=y1, y0=y0, propensity=np.full(n, 0.5))


def test_t_learner_recovers_linear_effect():
    ds = linear_effect_dataset()
    model = fit_t_learner("ridge:l2=1e-8", ds, ONES, ONES, SQUARED)
    cate = model.predict_cate(ds.X)
    assert np.allclose(cate, ds.X[:, 0], atol=1e-6)


def test_t_learner_null_effect():
    rng = np.random.default_rng(3)
    n = 5000
    X = rng.standard_normal((n, 2))
    t = (rng.uniform(size=n) < 0.5).astype(int)
    base = X[:, 0] + rng.standard_normal(n)
    ds = CausalDataset(X, t, base)
    model = fit_t_learner("ridge:l2=1.0", ds, ONES, ONES, SQUARED)
    assert np.mean(np.abs(model.predict_cate(X))) < 0.1


def test_t_learner_identical_arms_gives_zero_cate():
    X = np.tile(np.arange(10.0)[:, None], (2, 1))
    t = np.array([1] * 10 + [0] * 10)
    y = np.concatenate([np.arange(10.0), np.arange(10.0)])
    ds = CausalDataset(X, t, y)
    model = fit_t_learner("tree:depth=3,leaf=1", ds, ONES, ONES, SQUARED)
    assert np.allclose(model.predict_cate(X), 0.0)


def test_t_learner_arm_swap_antisymmetry():
    ds = linear_effect_dataset(seed=5)
    swapped = CausalDataset(ds.X, 1 - ds.t, ds.y)
    plain = CausalDataset(ds.X, ds.t, ds.y)
    m = fit_t_learner("ridge:l2=0.5", plain, ONES, ONES, SQUARED)
    ms = fit_t_learner("ridge:l2=0.5", swapped, ONES, ONES, SQUARED)
    q = np.random.default_rng(1).standard_normal((40, 3))
    assert np.allclose(m.predict_cate(q), -ms.predict_cate(q), atol=1e-10)


def test_t_learner_requires_both_arms():
    n = 10
    ds = CausalDataset(np.zeros((n, 1)), np.ones(n), np.zeros(n))
    with pytest.raises(DataError):
        fit_t_learner("ridge:l2=1.0", ds, ONES, ONES, SQUARED)


def test_s_learner_heads_differ_only_through_treatment_column():
    ds = linear_effect_dataset(seed=7)
    model = fit_s_learner("ridge:l2=1e-8", ds, ONES, ONES, SQUARED)
    cate = model.predict_cate(ds.X)
    # ridge on (x, t) can represent y = x1 * ... only additively; the fitted
    # cate is the coefficient of the treatment column, constant across x
    assert np.std(cate) < 1e-8


def test_x_learner_blend_degenerate_cases():
    ds = linear_effect_dataset(seed=11)
    m1 = fit_x_learner("ridge:l2=1e-8", ds, ONES, ONES, SQUARED,
                       blend_spec="const:1.0")
    m0 = fit_x_learner("ridge:l2=1e-8", ds, ONES, ONES, SQUARED,
                       blend_spec="const:0.0")
    mh = fit_x_learner("ridge:l2=1e-8", ds, ONES, ONES, SQUARED,
                       blend_spec="const:0.5")
    q = np.random.default_rng(2).standard_normal((30, 3))
    t1 = np.asarray(m1.tau1.predict(q))
    t0 = np.asarray(m0.tau0.predict(q))
    assert np.allclose(m1.predict_cate(q), t1)
    assert np.allclose(m0.predict_cate(q), t0)
    assert np.allclose(
        mh.predict_cate(q),
        0.5 * np.asarray(mh.tau1.predict(q)) + 0.5 * np.asarray(mh.tau0.predict(q)),
    )


def test_x_learner_perfect_stage1_pseudo_labels_recover_effect():
    ds = linear_effect_dataset(seed=13)
    model = fit_x_learner("ridge:l2=1e-8", ds, ONES, ONES, SQUARED,
                          blend_spec="const:0.5")
    assert np.allclose(model.predict_cate(ds.X), ds.X[:, 0], atol=1e-5)


def test_x_learner_fitted_blend_stays_in_range():
    ds = generate(DgpSpec(kind="observational", n=800, d=3, seed=17))
    model = fit_x_learner("tree:depth=3", ds, ONES, ONES, SQUARED)
    e = model.blend_values(ds.X)
    assert np.all(e >= 0.0) and np.all(e <= 1.0)
    assert model.blend_kind == "fitted_propensity"


def test_zero_one_heads_are_thresholded():
    rng = np.random.default_rng(19)
    n = 400
    X = rng.standard_normal((n, 2))
    t = (rng.uniform(size=n) < 0.5).astype(int)
    y = (X[:, 0] > 0).astype(float)
    ds = CausalDataset(X, t, y)
    model = fit_t_learner("ridge:l2=1.0", ds, ONES, ONES, parse_loss("zero_one"))
    preds = model.predict_outcome(X, 1)
    assert set(np.unique(preds)) <= {0.0, 1.0}


def test_parse_metalearner_specs():
    assert parse_metalearner("t:ridge:l2=1.0") == ("t", "ridge:l2=1.0", None)
    kind, base, blend = parse_metalearner(
        "x:forest:trees=10,depth=4,e=logistic:l2=2.0"
    )
    assert kind == "x" and base == "forest:trees=10,depth=4"
    assert blend == "logistic:l2=2.0"
    kind, base, blend = parse_metalearner("x:tree:depth=3,e=const:0.5")
    assert blend == "const:0.5"
    with pytest.raises(DataError):
        parse_metalearner("r:ridge:l2=1.0")
    with pytest.raises(DataError):
        parse_metalearner("t:")


def test_fit_metalearner_dispatch():
    ds = linear_effect_dataset(seed=23)
    for spec, cls_name in [
        ("t:ridge:l2=1.0", "TLearner"),
        ("s:ridge:l2=1.0", "SLearner"),
        ("x:ridge:l2=1.0,e=const:0.5", "XLearner"),
    ]:
        model = fit_metalearner(spec, ds, ONES, ONES, SQUARED)
        assert type(model).__name__ == cls_name
        assert np.asarray(model.predict_cate(ds.X[:5])).shape == (5,)


# -- pointwise decomposition oracles -------------------------------------------


def _losses_for_property_tests():
    return [parse_loss(s) for s in
            ("squared", "absolute", "quantile:0.2", "quantile:0.8")]


def test_tlearner_pointwise_decomposition_inequality():
    # psi((y1 - y0) - (p1 - p0)) <= C (psi(y1 - p1) + psi(y0 - p0))
    rng = np.random.default_rng(101)
    n = 100_000
    y1, y0, p1, p0 = (rng.standard_normal(n) * 3.0 for _ in range(4))
    for loss in _losses_for_property_tests():
        c = loss.constants().C
        lhs = loss.psi((y1 - y0) - (p1 - p0))
        rhs = c * (loss.psi(y1 - p1) + loss.psi(y0 - p0))
        assert int(np.sum(lhs > rhs + 1e-12 * np.maximum(1.0, rhs))) == 0


def test_xlearner_pointwise_decomposition_inequality():
    # the four-term second-stage split bounds the combined effect error
    rng = np.random.default_rng(202)
    n = 100_000
    y1, y0, h1, h0, t1, t0 = (rng.standard_normal(n) * 2.0 for _ in range(6))
    e = rng.uniform(size=n)
    for loss in _losses_for_property_tests():
        c = loss.constants().C
        lhs = loss.psi((y1 - y0) - (e * t1 + (1.0 - e) * t0))
        rhs = c * c * (
            loss.psi((1.0 - e) * (y1 - h1))
            + loss.psi(e * (y0 - h0))
            + loss.psi(e * (t1 - (y1 - h0)))
            + loss.psi((1.0 - e) * (t0 - (h1 - y0)))
        )
        assert int(np.sum(lhs > rhs + 1e-12 * np.maximum(1.0, rhs))) == 0
