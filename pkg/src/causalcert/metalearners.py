"""T-, S- and X-learner composition over pluggable base regressors.

The T-learner fits one head per arm; the S-learner fits a single head on
covariates augmented with the treatment as one extra numeric column; the
X-learner refits stage-two regressors on pseudo-effect labels and blends
them with a propensity estimate e(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import CausalDataset, DataError, arm_counts
from .learners import fit_classifier, fit_weighted_regressor
from .losses import DecomposableLoss
from .weights import WeightFn


def _binary_head(values: np.ndarray) -> np.ndarray:
    # zero_one losses need predictions in {0, 1}; threshold at 0.5
    return (values >= 0.5).astype(float)


def _arm_data(ds: CausalDataset, arm: int):
    mask = ds.arm_mask(arm)
    if not np.any(mask):
        raise DataError(f"arm {arm} is empty")
    return ds.X[mask], ds.y[mask]


@dataclass
class TLearner:
    h1: object
    h0: object
    loss: DecomposableLoss

    def predict_outcome(self, X, arm: int) -> np.ndarray:
        head = self.h1 if arm == 1 else self.h0
        out = np.asarray(head.predict(X), dtype=float)
        return _binary_head(out) if self.loss.kind == "zero_one" else out

    def predict_cate(self, X) -> np.ndarray:
        return self.predict_outcome(X, 1) - self.predict_outcome(X, 0)


@dataclass
class SLearner:
    h: object
    loss: DecomposableLoss

    def _augment(self, X, arm: int) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.hstack([X, np.full((X.shape[0], 1), float(arm))])

    def predict_outcome(self, X, arm: int) -> np.ndarray:
        out = np.asarray(self.h.predict(self._augment(X, arm)), dtype=float)
        return _binary_head(out) if self.loss.kind == "zero_one" else out

    def predict_cate(self, X) -> np.ndarray:
        return self.predict_outcome(X, 1) - self.predict_outcome(X, 0)


@dataclass
class XLearner:
    h1: object
    h0: object
    tau1: object
    tau0: object
    blend: Callable[[np.ndarray], np.ndarray]
    loss: DecomposableLoss
    blend_kind: str = "fitted_propensity"

    def predict_outcome(self, X, arm: int) -> np.ndarray:
        head = self.h1 if arm == 1 else self.h0
        out = np.asarray(head.predict(X), dtype=float)
        return _binary_head(out) if self.loss.kind == "zero_one" else out

    def blend_values(self, X) -> np.ndarray:
        e = np.asarray(self.blend(X), dtype=float)
        return np.clip(e, 0.0, 1.0)

    def predict_cate(self, X) -> np.ndarray:
        e = self.blend_values(X)
        t1 = np.asarray(self.tau1.predict(X), dtype=float)
        t0 = np.asarray(self.tau0.predict(X), dtype=float)
        return e * t1 + (1.0 - e) * t0


MetaLearner = TLearner | SLearner | XLearner


def fit_t_learner(
    spec: str, ds: CausalDataset, w1: WeightFn, w0: WeightFn,
    loss: DecomposableLoss,
) -> TLearner:
    """Fit one weighted head per arm, each minimizing the configured loss."""
    X1, y1 = _arm_data(ds, 1)
    X0, y0 = _arm_data(ds, 0)
    h1 = fit_weighted_regressor(spec, X1, y1, w1(X1), loss)
    h0 = fit_weighted_regressor(spec, X0, y0, w0(X0), loss)
    return TLearner(h1=h1, h0=h0, loss=loss)


def fit_s_learner(
    spec: str, ds: CausalDataset, w1: WeightFn, w0: WeightFn,
    loss: DecomposableLoss,
) -> SLearner:
    """Fit a single head on (x, t); per-arm weights apply to matching rows."""
    counts = arm_counts(ds)
    if counts.n_t1 == 0 or counts.n_t0 == 0:
        raise DataError("both arms must be nonempty")
    Xa = np.hstack([ds.X, ds.t[:, None].astype(float)])
    w = np.where(ds.t == 1, w1(ds.X), w0(ds.X))
    h = fit_weighted_regressor(spec, Xa, ds.y, w, loss)
    return SLearner(h=h, loss=loss)


def fit_x_learner(
    spec: str, ds: CausalDataset, w1: WeightFn, w0: WeightFn,
    loss: DecomposableLoss, blend_spec: str = "logistic:l2=1.0",
    stage2_spec: str | None = None,
) -> XLearner:
    """Two-stage fit: outcome heads, then pseudo-effect regressions.

    Treated rows get pseudo labels y - h0(x), control rows h1(x) - y. The
    blend is a propensity classifier fit on the full dataset, or a
    constant via "const:p". Stage two reuses the stage-one regressor spec
    unless overridden.
    """
    stage1 = fit_t_learner(spec, ds, w1, w0, loss)
    X1, y1 = _arm_data(ds, 1)
    X0, y0 = _arm_data(ds, 0)
    pseudo1 = y1 - np.asarray(stage1.h0.predict(X1), dtype=float)
    pseudo0 = np.asarray(stage1.h1.predict(X0), dtype=float) - y0
    s2 = stage2_spec if stage2_spec is not None else spec
    tau1 = fit_weighted_regressor(s2, X1, pseudo1, w1(X1), loss)
    tau0 = fit_weighted_regressor(s2, X0, pseudo0, w0(X0), loss)

    blend_spec = blend_spec.strip()
    if blend_spec.startswith("const:"):
        p = float(blend_spec.split(":", 1)[1])
        if not 0.0 <= p <= 1.0:
            raise DataError("constant blend must lie in [0, 1]")
        blend = lambda X: np.full(np.atleast_2d(X).shape[0], p)
        blend_kind = f"const:{p:g}"
    else:
        clf = fit_classifier(blend_spec, ds.X, ds.t.astype(float))
        blend = lambda X: np.asarray(clf.predict_proba(X), dtype=float)
        blend_kind = "fitted_propensity"
    return XLearner(
        h1=stage1.h1, h0=stage1.h0, tau1=tau1, tau0=tau0,
        blend=blend, loss=loss, blend_kind=blend_kind,
    )


def predict_cate(model: MetaLearner, X) -> np.ndarray:
    return model.predict_cate(X)


def parse_metalearner(text: str) -> tuple[str, str, str | None]:
    """Split a meta-learner spec into (kind, base learner spec, blend spec).

    Grammar: "t:<learner>", "s:<learner>", "x:<learner>,e=<clf|const:p>".
    The blend marker ",e=" is found from the right so nested learner specs
    may contain commas.
    """
    text = text.strip()
    kind, _, rest = text.partition(":")
    if kind not in ("t", "s", "x"):
        raise DataError(f"unknown meta-learner kind {kind!r}")
    if not rest:
        raise DataError("meta-learner spec needs a base learner")
    blend = None
    if kind == "x" and ",e=" in rest:
        rest, _, blend = rest.rpartition(",e=")
    return kind, rest, blend


def fit_metalearner(
    text: str, ds: CausalDataset, w1: WeightFn, w0: WeightFn,
    loss: DecomposableLoss,
) -> MetaLearner:
    kind, base, blend = parse_metalearner(text)
    if kind == "t":
        return fit_t_learner(base, ds, w1, w0, loss)
    if kind == "s":
        return fit_s_learner(base, ds, w1, w0, loss)
    return fit_x_learner(
        base, ds, w1, w0, loss,
        blend_spec=blend if blend is not None else "logistic:l2=1.0",
    )
