"""Reweighting functions w(x) for bridging observed and complete
distributions.

Two kinds: the constant weighting w == 1, and normalized inverse
propensity weights built from a fitted treatment classifier. The inverse
weights are normalized by their sample mean over the training rows of the
target arm, so the arm-conditional empirical mean of w is exactly 1; the
normalizer is frozen at build time and reused for later queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import CausalDataset, DataError, arm_counts


@dataclass
class WeightFn:
    """A frozen reweighting function.

    ``m_hat`` is the normalizer (sample mean of the raw weights over the
    training arm), ``w_max`` the maximum normalized weight seen on that
    arm, and ``positivity_violated`` flags non-finite raw weights (zero
    predicted propensity without clipping); certificates built from such
    weights are vacuous rather than errors.
    """

    kind: str  # "constant_one" | "inverse_propensity"
    arm: int | None = None
    clip_eps: float = 0.0
    m_hat: float = 1.0
    w_max: float = 1.0
    positivity_violated: bool = False
    p_hat: float | None = None
    classifier: object | None = field(default=None, repr=False)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "constant_one":
            return np.ones(X.shape[0])
        proba = np.asarray(self.classifier.predict_proba(X), dtype=float)
        e_a = proba if self.arm == 1 else 1.0 - proba
        e_a = np.maximum(e_a, self.clip_eps)
        with np.errstate(divide="ignore"):
            raw = np.where(e_a > 0.0, self.p_hat / e_a, math.inf)
        return raw / self.m_hat


def build_constant() -> WeightFn:
    """The constant weighting w == 1 (already normalized, w_max = 1)."""
    return WeightFn(kind="constant_one")


def build_ipw(
    e_hat, arm: int, ds: CausalDataset, clip_eps: float = 0.0
) -> WeightFn:
    """Normalized inverse propensity weights for one arm.

    Raw weights are p_hat / max(e_a(x), clip_eps) where e_a(x) is the
    predicted probability of the target arm; they are then divided by
    their sample mean over the arm's training rows. With clip_eps == 0 a
    zero predicted propensity yields an infinite weight, which sets the
    positivity flag instead of raising.
    """
    if arm not in (0, 1):
        raise DataError("arm must be 0 or 1")
    if not 0.0 <= clip_eps < 0.5:
        raise DataError("clip_eps must lie in [0, 0.5)")
    counts = arm_counts(ds)
    if counts.n_t1 == 0 or counts.n_t0 == 0:
        raise DataError("both treatment arms are needed to build weights")
    p_hat = counts.p_hat_t1 if arm == 1 else 1.0 - counts.p_hat_t1

    fn = WeightFn(
        kind="inverse_propensity",
        arm=arm,
        clip_eps=clip_eps,
        m_hat=1.0,
        p_hat=p_hat,
        classifier=e_hat,
    )
    raw_on_arm = fn(ds.X[ds.arm_mask(arm)])  # m_hat is 1 here, so raw values
    if not np.all(np.isfinite(raw_on_arm)):
        fn.positivity_violated = True
        fn.w_max = math.inf
        return fn
    fn.m_hat = float(np.mean(raw_on_arm))
    fn.w_max = float(np.max(raw_on_arm / fn.m_hat))
    return fn


def balance_term(w: WeightFn, ds: CausalDataset, arm: int) -> float:
    """Mean over all rows of (w(x) * 1[t == arm] / p_hat - 1)^2.

    Measures how far the reweighted sample is from balance; positive even
    for a perfect randomized trial because of the indicator.
    """
    counts = arm_counts(ds)
    p_hat = counts.p_hat_t1 if arm == 1 else 1.0 - counts.p_hat_t1
    if p_hat == 0.0:
        raise DataError(f"no samples in arm {arm}")
    values = w(ds.X) * (ds.t == arm) / p_hat - 1.0
    return float(np.mean(values**2))


def parse_weight(text: str, ds: CausalDataset | None = None, arm: int = 1):
    """Parse a weight spec string; IPW specs need a dataset to build on.

    Grammar: "one" or "ipw:clf=<classifier-spec>,clip=0.01". The
    classifier spec may itself contain commas; every comma-separated item
    that is not a known ipw option is folded back into the clf value.
    """
    text = text.strip()
    if text == "one":
        return build_constant()
    head, _, rest = text.partition(":")
    if head != "ipw":
        raise DataError(f"unknown weight spec {text!r}")
    clf_spec, clip_eps = None, 0.0
    for item in rest.split(","):
        key, _, value = item.partition("=")
        if key == "clf":
            clf_spec = value
        elif key == "clip":
            clip_eps = float(value)
        elif clf_spec is not None:
            clf_spec += "," + item  # continuation of a nested learner spec
        else:
            raise DataError(f"malformed weight option {item!r}")
    if clf_spec is None:
        raise DataError("ipw weight spec needs clf=<classifier-spec>")
    if ds is None:
        raise DataError("ipw weights require a dataset to build on")
    from .learners import fit_classifier

    e_hat = fit_classifier(clf_spec, ds.X, ds.t.astype(float))
    return build_ipw(e_hat, arm, ds, clip_eps=clip_eps)
