import numpy as np
import pytest

from causalcert.data import CausalDataset
from causalcert.learners import (
    HonestForest,
    KnnRegressor,
    LearnerError,
    LogisticClassifier,
    RegressionTree,
    RidgeRegressor,
    TreeClassifier,
    brier_score,
    fit_classifier,
    fit_weighted_regressor,
    make_regressor,
    weighted_quantile,
)
from causalcert.losses import parse_loss
from causalcert.weights import build_constant


def make_xy(n=200, d=3, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = 2.0 * X[:, 0] - X[:, 1] + 0.5 + noise * rng.standard_normal(n)
    return X, y


def test_weighted_quantile_matches_replication():
    rng = np.random.default_rng(1)
    v = rng.standard_normal(50)
    w = rng.integers(1, 5, size=50).astype(float)
    expanded = np.repeat(v, w.astype(int))
    for alpha in (0.1, 0.5, 0.8):
        got = weighted_quantile(v, w, alpha)
        ref = weighted_quantile(expanded, np.ones(expanded.size), alpha)
        assert got == ref


def test_ridge_recovers_exact_linear_fit():
    X, y = make_xy()
    model = RidgeRegressor(l2=0.0).fit(X, y)
    assert np.allclose(model.predict(X), y, atol=1e-8)
    assert model.coef_ == pytest.approx([2.0, -1.0, 0.0], abs=1e-8)
    assert model.intercept_ == pytest.approx(0.5, abs=1e-8)


def test_constant_target_fits_constant():
    X, _ = make_xy()
    y = np.full(X.shape[0], 3.25)
    for spec in ("ridge:l2=1.0", "knn:k=5", "tree:depth=4", "forest:trees=5,seed=1"):
        model = fit_weighted_regressor(spec, X, y)
        assert np.allclose(model.predict(X[:17]), 3.25, atol=1e-10)


def test_ridge_singular_fallback():
    X = np.zeros((10, 2))
    X[:, 0] = 1.0  # collinear with the intercept
    y = np.ones(10)
    model = RidgeRegressor(l2=0.0).fit(X, y)
    assert model.regularization_fallback
    assert np.allclose(model.predict(X), 1.0, atol=1e-6)


@pytest.mark.parametrize(
    "spec",
    ["ridge:l2=0.5", "knn:k=3", "tree:depth=5,leaf=1", "forest:trees=7,subsample=1.0,seed=3"],
)
def test_weight_duplication_identity(spec):
    rng = np.random.default_rng(5)
    X, y = make_xy(n=80, seed=2, noise=0.3)
    w = rng.integers(1, 4, size=80).astype(float)
    rep = np.repeat(np.arange(80), w.astype(int))
    weighted = fit_weighted_regressor(spec, X, y, w)
    replicated = fit_weighted_regressor(spec, X[rep], y[rep], np.ones(rep.size))
    q = rng.standard_normal((25, 3))
    assert np.allclose(weighted.predict(q), replicated.predict(q), atol=1e-8)


def test_zero_weights_rejected():
    X, y = make_xy(n=10)
    with pytest.raises(LearnerError):
        fit_weighted_regressor("ridge:l2=1.0", X, y, np.zeros(10))
    with pytest.raises(LearnerError):
        fit_weighted_regressor("ridge:l2=1.0", X, y, -np.ones(10))


def test_seeded_determinism_of_forest():
    X, y = make_xy(n=120, seed=3, noise=0.5)
    a = HonestForest(n_trees=10, max_depth=4, seed=9).fit(X, y)
    b = HonestForest(n_trees=10, max_depth=4, seed=9).fit(X, y)
    q = np.random.default_rng(0).standard_normal((30, 3))
    assert np.array_equal(a.predict(q), b.predict(q))
    c = HonestForest(n_trees=10, max_depth=4, seed=10).fit(X, y)
    assert not np.array_equal(a.predict(q), c.predict(q))


def test_tree_splits_on_signal():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((400, 2))
    y = np.where(X[:, 1] > 0.0, 2.0, -2.0)
    tree = RegressionTree(max_depth=2, min_leaf=5).fit(X, y)
    assert np.mean((tree.predict(X) - y) ** 2) < 0.05


def test_knn_interpolates_training_points_with_k1():
    X, y = make_xy(n=50, noise=1.0)
    model = KnnRegressor(k=1).fit(X, y)
    assert np.allclose(model.predict(X), y)


def test_logistic_separates_and_stays_in_range():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(-2.0, 0.5, (100, 1)), rng.normal(2.0, 0.5, (100, 1))])
    t = np.concatenate([np.zeros(100), np.ones(100)])
    clf = LogisticClassifier(l2=1.0).fit(X, t)
    proba = clf.predict_proba(np.array([[-4.0], [4.0]]))
    assert proba[0] < 0.01 and proba[1] > 0.99
    grid = clf.predict_proba(rng.standard_normal((100_000, 1)) * 50.0)
    assert np.all(grid >= 0.0) and np.all(grid <= 1.0)


def test_classifier_base_rate_for_depth_zero_tree():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((5000, 2))
    t = rng.integers(0, 2, 5000).astype(float)
    clf = TreeClassifier(max_depth=0).fit(X, t)
    proba = clf.predict_proba(X[:100])
    assert np.allclose(proba, proba[0])
    assert abs(proba[0] - t.mean()) < 0.05


def test_tree_classifier_laplace_smoothing():
    # a pure leaf with m samples predicts (m + 1) / (m + 2)
    X = np.vstack([np.full((7, 1), -1.0), np.full((3, 1), 1.0)])
    t = np.array([1.0] * 7 + [0.0] * 3)
    clf = TreeClassifier(max_depth=1, min_leaf=1).fit(X, t)
    assert clf.predict_proba(np.array([[-1.0]]))[0] == pytest.approx(8.0 / 9.0)
    assert clf.predict_proba(np.array([[1.0]]))[0] == pytest.approx(1.0 / 5.0)


def test_single_class_input_rejected():
    X = np.zeros((10, 1))
    with pytest.raises(LearnerError):
        fit_classifier("logistic:l2=1.0", X, np.ones(10))
    with pytest.raises(LearnerError):
        fit_classifier("treeclf:depth=2", X, np.zeros(10))


def test_classifier_range_property():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((300, 2))
    t = (X[:, 0] + 0.3 * rng.standard_normal(300) > 0).astype(float)
    for spec in ("logistic:l2=0.1", "treeclf:depth=4"):
        clf = fit_classifier(spec, X, t)
        proba = clf.predict_proba(rng.standard_normal((100_000, 2)) * 3.0)
        assert np.all(proba >= 0.0) and np.all(proba <= 1.0)


def test_brier_score_examples():
    rng = np.random.default_rng(12)
    n = 4000
    X = rng.standard_normal((n, 2))
    t = (rng.uniform(size=n) < 0.3).astype(int)
    ds = CausalDataset(X, t, rng.standard_normal(n))

    class Fixed:
        def __init__(self, p):
            self.p = p

        def predict_proba(self, X):
            return np.full(np.atleast_2d(X).shape[0], self.p)

    # nu == 0.5 scores 0.25 regardless of the treatments
    assert brier_score(Fixed(0.5), ds, 1, build_constant()) == pytest.approx(0.25)

    class Perfect:
        def predict_proba(self_, X):
            return ds.t.astype(float)

    assert brier_score(Perfect(), ds, 1, build_constant()) == 0.0
    # constant base-rate classifier scores about p(1-p) under a trial
    got = brier_score(Fixed(0.3), ds, 1, build_constant())
    assert got == pytest.approx(0.21, abs=0.02)


def test_quantile_mode_ridge_converges_to_conditional_quantile():
    # location-shift Gaussian: q_alpha(y | x) = x + 1 + z_alpha
    rng = np.random.default_rng(21)
    n = 10_000
    X = rng.standard_normal((n, 1))
    y = X[:, 0] + 1.0 + rng.standard_normal(n)
    loss = parse_loss("quantile:0.8")
    model = fit_weighted_regressor("ridge:l2=1e-6", X, y, None, loss)
    grid = np.linspace(-2.0, 2.0, 41)[:, None]
    z80 = 0.8416212335729143
    err = np.abs(model.predict(grid) - (grid[:, 0] + 1.0 + z80))
    assert err.mean() < 0.1


def test_quantile_mode_tree_converges_on_step_data():
    rng = np.random.default_rng(22)
    n = 10_000
    X = rng.standard_normal((n, 1))
    y = np.where(X[:, 0] > 0.0, 2.0, 0.0) + rng.standard_normal(n)
    loss = parse_loss("quantile:0.8")
    model = fit_weighted_regressor("tree:depth=2,leaf=500", X, y, None, loss)
    z80 = 0.8416212335729143
    grid = np.array([[-1.5], [-0.5], [0.5], [1.5]])
    target = np.where(grid[:, 0] > 0.0, 2.0, 0.0) + z80
    assert np.abs(model.predict(grid) - target).mean() < 0.1


def test_absolute_loss_fits_conditional_median():
    rng = np.random.default_rng(23)
    n = 8000
    X = rng.standard_normal((n, 1))
    # asymmetric noise: median differs from the mean
    noise = rng.exponential(1.0, n) - np.log(2.0)
    y = X[:, 0] + noise
    model = fit_weighted_regressor("ridge:l2=1e-6", X, y, None, parse_loss("absolute"))
    grid = np.linspace(-1.5, 1.5, 21)[:, None]
    assert np.abs(model.predict(grid) - grid[:, 0]).mean() < 0.1


def test_make_regressor_rejects_unknown():
    with pytest.raises(LearnerError):
        make_regressor("svm:c=1.0")
    with pytest.raises(LearnerError):
        make_regressor("ridge:na=1")
