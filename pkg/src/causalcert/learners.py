"""Self-contained base learners: weighted regressors and probabilistic
classifiers.

All regressors honor nonnegative sample weights so that an integer weight
behaves exactly like replicating the sample. Two fitting objectives are
supported: weighted squared error (the default) and, when a quantile
level is set, the weighted pinball objective. Everything is deterministic
given its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class LearnerError(ValueError):
    pass


def weighted_quantile(values: np.ndarray, weights: np.ndarray, alpha: float) -> float:
    """Smallest v with cumulative weight >= alpha * total weight.

    Minimizes sum_i w_i * pinball_alpha(v_i - c) over c, and agrees with
    the plain empirical quantile of the replicated sample when weights are
    integers.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    total = w.sum()
    if total <= 0.0:
        raise LearnerError("weights must have positive total")
    cum = np.cumsum(w)
    idx = int(np.searchsorted(cum, alpha * total, side="left"))
    return float(v[min(idx, len(v) - 1)])


def _check_fit_args(X, y, sample_weight):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if y.shape != (n,) or n == 0:
        raise LearnerError("X and y must be nonempty with matching rows")
    if sample_weight is None:
        w = np.ones(n)
    else:
        w = np.asarray(sample_weight, dtype=float)
        if w.shape != (n,):
            raise LearnerError("sample_weight must match the number of rows")
        if np.any(w < 0.0):
            raise LearnerError("sample weights must be nonnegative")
        if not w.sum() > 0.0:
            raise LearnerError("sample weights must not be all zero")
    return X, y, w


# =============================================================================
# Regressors
# =============================================================================


class RidgeRegressor:
    """Linear model with an unpenalized intercept.

    Squared mode solves the weighted normal equations exactly. Quantile
    mode warm-starts from that solution (intercept recentered on the
    weighted residual quantile) and refines with averaged subgradient
    steps on the weighted pinball objective.
    """

    def __init__(self, l2: float = 1.0, quantile: float | None = None,
                 steps: int = 400):
        if l2 < 0.0:
            raise LearnerError("l2 must be nonnegative")
        self.l2 = l2
        self.quantile = quantile
        self.steps = steps
        self.coef_ = None
        self.intercept_ = 0.0
        self.regularization_fallback = False

    def _solve_ls(self, X, y, w, l2):
        n, d = X.shape
        Xa = np.hstack([X, np.ones((n, 1))])
        A = (Xa * w[:, None]).T @ Xa
        A[:d, :d] += l2 * np.eye(d)
        b = (Xa * w[:, None]).T @ y
        return np.linalg.solve(A, b)

    def fit(self, X, y, sample_weight=None):
        X, y, w = _check_fit_args(X, y, sample_weight)
        try:
            beta = self._solve_ls(X, y, w, self.l2)
        except np.linalg.LinAlgError:
            self.regularization_fallback = True
            beta = self._solve_ls(X, y, w, max(self.l2, 1e-8))
        self.coef_, self.intercept_ = beta[:-1], float(beta[-1])
        if self.quantile is not None:
            self._refine_pinball(X, y, w)
        return self

    def _refine_pinball(self, X, y, w):
        alpha = self.quantile
        wn = w / w.sum()
        resid = y - X @ self.coef_ - self.intercept_
        self.intercept_ += weighted_quantile(resid, w, alpha)
        beta = self.coef_.copy()
        b = self.intercept_
        scale = float(np.sqrt(np.average((y - np.average(y, weights=wn)) ** 2,
                                         weights=wn))) or 1.0
        col_scale = np.sqrt(np.average(X * X, axis=0, weights=wn)) + 1e-12
        avg_beta, avg_b, n_avg = np.zeros_like(beta), 0.0, 0
        for step in range(1, self.steps + 1):
            r = y - X @ beta - b
            g = np.where(r > 0.0, -alpha, np.where(r < 0.0, 1.0 - alpha, 0.0)) * wn
            grad_beta = X.T @ g + self.l2 * beta / w.sum()
            grad_b = float(g.sum())
            lr = scale / math.sqrt(step)
            beta -= lr * grad_beta / (col_scale * col_scale)
            b -= lr * grad_b
            if step > self.steps // 2:
                avg_beta += beta
                avg_b += b
                n_avg += 1
        self.coef_ = avg_beta / n_avg
        self.intercept_ = avg_b / n_avg

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.coef_ + self.intercept_


class KnnRegressor:
    """Nearest-neighbor regressor aggregating by cumulative weight.

    Neighbors are consumed in distance order (ties broken by row index)
    until their weights sum to k, the last one fractionally; with integer
    weights this matches running plain k-NN on the replicated sample.
    """

    def __init__(self, k: int = 5, quantile: float | None = None):
        if k < 1:
            raise LearnerError("k must be a positive integer")
        self.k = k
        self.quantile = quantile

    def fit(self, X, y, sample_weight=None):
        self.X_, self.y_, self.w_ = _check_fit_args(X, y, sample_weight)
        return self

    def _aggregate(self, order):
        w = self.w_[order]
        cum = np.cumsum(w)
        take = int(np.searchsorted(cum, self.k, side="left")) + 1
        take = min(take, len(order))
        eff = w[:take].copy()
        prev = cum[take - 2] if take >= 2 else 0.0
        eff[-1] = min(eff[-1], self.k - prev)
        if eff[-1] <= 0.0:  # total weight below k: use everything
            eff[-1] = w[take - 1]
        vals = self.y_[order[:take]]
        if self.quantile is None:
            return float(np.average(vals, weights=eff))
        return weighted_quantile(vals, eff, self.quantile)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0])
        usable = self.w_ > 0.0
        base_idx = np.nonzero(usable)[0]
        Xu = self.X_[usable]
        for start in range(0, X.shape[0], 256):
            block = X[start:start + 256]
            d2 = ((block[:, None, :] - Xu[None, :, :]) ** 2).sum(axis=2)
            for i in range(block.shape[0]):
                order = base_idx[np.argsort(d2[i], kind="stable")]
                out[start + i] = self._aggregate(order)
        return out


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    value: float = 0.0
    pos_weight: float = 0.0
    total_weight: float = 0.0


class RegressionTree:
    """Greedy binary tree minimizing weighted squared error.

    ``min_leaf`` is measured in total sample weight, so integer weights
    and replication induce the same tree. Leaf values are weighted means,
    or weighted quantiles in quantile mode.
    """

    def __init__(self, max_depth: int = 6, min_leaf: float = 5.0,
                 quantile: float | None = None):
        if max_depth < 0:
            raise LearnerError("max_depth must be nonnegative")
        if min_leaf <= 0:
            raise LearnerError("min_leaf must be positive")
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.quantile = quantile
        self.nodes: list[_TreeNode] = []

    def fit(self, X, y, sample_weight=None):
        X, y, w = _check_fit_args(X, y, sample_weight)
        self.nodes = []
        self._build(X, y, w, depth=0)
        return self

    def _leaf_value(self, y, w):
        if self.quantile is None:
            return float(np.average(y, weights=w))
        return weighted_quantile(y, w, self.quantile)

    def _best_split(self, X, y, w):
        W = w.sum()
        sy = float((w * y).sum())
        syy = float((w * y * y).sum())
        sse_total = syy - sy * sy / W
        best = (1e-12, -1, 0.0)  # (gain, feature, threshold)
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            xs, ys, ws = X[order, j], y[order], w[order]
            cw = np.cumsum(ws)
            cwy = np.cumsum(ws * ys)
            cwy2 = np.cumsum(ws * ys * ys)
            valid = (
                (xs[:-1] < xs[1:])
                & (cw[:-1] >= self.min_leaf)
                & (W - cw[:-1] >= self.min_leaf)
                & (cw[:-1] > 0.0)
                & (W - cw[:-1] > 0.0)
            )
            if not np.any(valid):
                continue
            i = np.nonzero(valid)[0]
            sse_l = cwy2[i] - cwy[i] ** 2 / cw[i]
            rw = W - cw[i]
            sse_r = (syy - cwy2[i]) - (sy - cwy[i]) ** 2 / rw
            gains = sse_total - sse_l - sse_r
            k = int(np.argmax(gains))
            if gains[k] > best[0]:
                best = (float(gains[k]), j, 0.5 * (xs[i[k]] + xs[i[k] + 1]))
        return best

    def _build(self, X, y, w, depth) -> int:
        node = _TreeNode(
            value=self._leaf_value(y, w),
            pos_weight=float((w * (y == 1.0)).sum()),
            total_weight=float(w.sum()),
        )
        self.nodes.append(node)
        me = len(self.nodes) - 1
        if (
            depth >= self.max_depth
            or w.sum() < 2 * self.min_leaf
            or np.all(y == y[0])
        ):
            return me
        gain, feature, threshold = self._best_split(X, y, w)
        if feature < 0:
            return me
        mask = X[:, feature] <= threshold
        node.feature, node.threshold = feature, float(threshold)
        node.left = self._build(X[mask], y[mask], w[mask], depth + 1)
        node.right = self._build(X[~mask], y[~mask], w[~mask], depth + 1)
        return me

    def _leaf_index(self, x) -> int:
        i = 0
        while self.nodes[i].feature >= 0:
            node = self.nodes[i]
            i = node.left if x[node.feature] <= node.threshold else node.right
        return i

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.nodes[self._leaf_index(x)].value for x in X])


class HonestForest:
    """Average of regression trees fit on disjoint-ish row subsamples.

    Subsampling is without replacement at the given ratio; with
    subsample=1.0 the forest degenerates to identical trees and inherits
    their determinism properties exactly.
    """

    def __init__(self, n_trees: int = 100, max_depth: int = 8,
                 min_leaf: float = 5.0, subsample: float = 0.632,
                 seed: int = 0, quantile: float | None = None):
        if n_trees < 1:
            raise LearnerError("n_trees must be positive")
        if not 0.0 < subsample <= 1.0:
            raise LearnerError("subsample must lie in (0, 1]")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.subsample = subsample
        self.seed = seed
        self.quantile = quantile
        self.trees_: list[RegressionTree] = []

    def fit(self, X, y, sample_weight=None):
        X, y, w = _check_fit_args(X, y, sample_weight)
        rng = np.random.default_rng(self.seed)
        n = X.shape[0]
        m = max(1, int(self.subsample * n))
        self.trees_ = []
        for _ in range(self.n_trees):
            idx = np.sort(rng.choice(n, size=m, replace=False))
            tree = RegressionTree(self.max_depth, self.min_leaf, self.quantile)
            tree.fit(X[idx], y[idx], w[idx])
            self.trees_.append(tree)
        return self

    def predict(self, X):
        preds = np.stack([tree.predict(X) for tree in self.trees_], axis=0)
        return preds.mean(axis=0)


# =============================================================================
# Probabilistic classifiers
# =============================================================================


class LogisticClassifier:
    """L2-regularized logistic regression fit by damped Newton steps."""

    def __init__(self, l2: float = 1.0, max_iter: int = 100, tol: float = 1e-8):
        if l2 < 0.0:
            raise LearnerError("l2 must be nonnegative")
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, t, sample_weight=None):
        X, t, w = _check_fit_args(X, t, sample_weight)
        if len(np.unique(t[w > 0])) < 2:
            raise LearnerError("both classes must be present to fit a classifier")
        n, d = X.shape
        Xa = np.hstack([X, np.ones((n, 1))])
        beta = np.zeros(d + 1)
        ridge = max(self.l2, 1e-10) * np.eye(d + 1)
        ridge[-1, -1] = 1e-10  # keep the intercept effectively unpenalized
        for _ in range(self.max_iter):
            z = Xa @ beta
            p = 1.0 / (1.0 + np.exp(-z))
            grad = Xa.T @ (w * (p - t)) + ridge @ beta
            s = np.maximum(w * p * (1.0 - p), 1e-12)
            hess = (Xa * s[:, None]).T @ Xa + ridge
            step = np.linalg.solve(hess, grad)
            beta -= step
            if float(np.max(np.abs(step))) < self.tol:
                break
        self.coef_, self.intercept_ = beta[:-1], float(beta[-1])
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = np.clip(X @ self.coef_ + self.intercept_, -500.0, 500.0)
        return 1.0 / (1.0 + np.exp(-z))


class TreeClassifier:
    """Decision tree with Laplace-smoothed leaf frequencies.

    A leaf holding total weight m of which m_pos is labeled 1 predicts
    (m_pos + 1) / (m + 2), so probabilities stay inside (0, 1).
    """

    def __init__(self, max_depth: int = 6, min_leaf: float = 5.0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self._tree = RegressionTree(max_depth=max_depth, min_leaf=min_leaf)

    def fit(self, X, t, sample_weight=None):
        X, t, w = _check_fit_args(X, t, sample_weight)
        if not np.all((t == 0.0) | (t == 1.0)):
            raise LearnerError("labels must be 0 or 1")
        if len(np.unique(t[w > 0])) < 2:
            raise LearnerError("both classes must be present to fit a classifier")
        self._tree.fit(X, t, w)
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        tree = self._tree
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            node = tree.nodes[tree._leaf_index(x)]
            out[i] = (node.pos_weight + 1.0) / (node.total_weight + 2.0)
        return out


class ConstantClassifier:
    """Degenerate classifier returning a fixed probability."""

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise LearnerError("constant probability must lie in [0, 1]")
        self.p = p

    def fit(self, X, t, sample_weight=None):
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.full(X.shape[0], self.p)


# =============================================================================
# Spec strings and fitting entry points
# =============================================================================


def _parse_options(rest: str, int_keys, float_keys) -> dict:
    out: dict = {}
    if not rest:
        return out
    for item in rest.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        if not value:
            raise LearnerError(f"malformed learner option {item!r}")
        if key in int_keys:
            out[key] = int(value)
        elif key in float_keys:
            out[key] = float(value)
        else:
            raise LearnerError(f"unknown learner option {key!r}")
    return out


def make_regressor(spec: str, quantile: float | None = None):
    """Build a regressor from a spec string.

    Grammar: "ridge:l2=1.0", "knn:k=5", "tree:depth=6,leaf=5",
    "forest:trees=100,depth=8,leaf=5,subsample=0.632,seed=0".
    """
    head, _, rest = spec.strip().partition(":")
    if head == "ridge":
        opts = _parse_options(rest, int_keys={"steps"}, float_keys={"l2"})
        return RidgeRegressor(quantile=quantile, **opts)
    if head == "knn":
        opts = _parse_options(rest, int_keys={"k"}, float_keys=set())
        return KnnRegressor(quantile=quantile, **opts)
    if head == "tree":
        opts = _parse_options(rest, int_keys={"depth"}, float_keys={"leaf"})
        return RegressionTree(
            max_depth=opts.get("depth", 6),
            min_leaf=opts.get("leaf", 5.0),
            quantile=quantile,
        )
    if head == "forest":
        opts = _parse_options(
            rest, int_keys={"trees", "depth", "seed"},
            float_keys={"leaf", "subsample"},
        )
        return HonestForest(
            n_trees=opts.get("trees", 100),
            max_depth=opts.get("depth", 8),
            min_leaf=opts.get("leaf", 5.0),
            subsample=opts.get("subsample", 0.632),
            seed=opts.get("seed", 0),
            quantile=quantile,
        )
    raise LearnerError(f"unknown regressor spec {spec!r}")


def make_classifier(spec: str):
    """Build a probabilistic classifier from a spec string.

    Grammar: "logistic:l2=1.0,max_iter=100", "treeclf:depth=6,leaf=5",
    "const:0.5".
    """
    head, _, rest = spec.strip().partition(":")
    if head == "logistic":
        opts = _parse_options(rest, int_keys={"max_iter"}, float_keys={"l2", "tol"})
        return LogisticClassifier(**opts)
    if head == "treeclf":
        opts = _parse_options(rest, int_keys={"depth"}, float_keys={"leaf"})
        return TreeClassifier(
            max_depth=opts.get("depth", 6), min_leaf=opts.get("leaf", 5.0)
        )
    if head == "const":
        return ConstantClassifier(float(rest))
    raise LearnerError(f"unknown classifier spec {spec!r}")


def fit_weighted_regressor(spec: str, X, y, sample_weight=None, loss=None):
    """Fit a regressor whose objective matches the configured loss.

    Squared and zero_one losses fit the weighted squared error; absolute
    fits the weighted median (pinball at 0.5); quantile fits the weighted
    pinball at its alpha.
    """
    quantile = None
    if loss is not None:
        if loss.kind == "quantile":
            quantile = loss.alpha
        elif loss.kind == "absolute":
            quantile = 0.5
    model = make_regressor(spec, quantile=quantile)
    return model.fit(X, y, sample_weight)


def fit_classifier(spec: str, X, t, sample_weight=None):
    return make_classifier(spec).fit(X, t, sample_weight)


def brier_score(nu, ds, arm: int, weight_fn=None) -> float:
    """Squared-weight Brier score of nu predicting membership in ``arm``.

    Computes mean over all rows of w(x)^2 * (nu_a(x) - 1[t == arm])^2,
    where nu_a is the predicted probability of the queried arm.
    """
    proba = np.asarray(nu.predict_proba(ds.X), dtype=float)
    nu_a = proba if arm == 1 else 1.0 - proba
    ind = (ds.t == arm).astype(float)
    w = np.ones(ds.n) if weight_fn is None else np.asarray(weight_fn(ds.X), dtype=float)
    return float(np.mean(w * w * (nu_a - ind) ** 2))
