"""Synthetic data generators with full oracle fields.

Three regimes, ordered by difficulty:

* ``near_rct`` -- treatment propensities vary mildly around a base rate
  (and are exactly constant when ``rct_wiggle`` is 0).
* ``observational`` -- propensities are a smooth logistic function of the
  covariates, clamped into [0.02, 0.98] so positivity holds.
* ``hidden_confounded`` -- after the treatment draw, the treated potential
  outcome of every control row is shifted by ``offset``; the realized
  treatment itself becomes a hidden confounder and the recorded true
  propensity equals the treatment indicator, so positivity is broken.

The structural outcome surfaces are fixed: a sparse quadratic baseline
plus a piecewise-linear treatment effect with a kink at zero. All draws
come from a seeded generator, so generation is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import CausalDataset, DataError
from .losses import DecomposableLoss

DGP_KINDS = ("near_rct", "observational", "hidden_confounded")

OBSERVATIONAL_PS_RANGE = (0.02, 0.98)
NEAR_RCT_PS_RANGE = (0.35, 0.65)


@dataclass(frozen=True)
class DgpSpec:
    """Configuration of one synthetic generator."""

    kind: str
    n: int
    d: int
    noise_sd: float = 1.0
    seed: int = 0
    offset: float = -20.0  # hidden_confounded only
    base_rate: float = 0.5
    rct_wiggle: float = 0.1  # near_rct propensity amplitude; 0 = exact RCT

    def __post_init__(self) -> None:
        if self.kind not in DGP_KINDS:
            raise DataError(f"unknown dgp kind {self.kind!r}")
        if self.n < 2 or self.d < 1:
            raise DataError("need n >= 2 and d >= 1")
        if self.noise_sd < 0.0:
            raise DataError("noise_sd must be nonnegative")
        if not 0.0 < self.base_rate < 1.0:
            raise DataError("base_rate must lie in (0, 1)")
        if not 0.0 <= self.rct_wiggle <= 0.15:
            raise DataError("rct_wiggle must lie in [0, 0.15]")


def baseline_surface(X: np.ndarray) -> np.ndarray:
    """Control outcome surface: sparse quadratic in the first covariate."""
    x1 = X[:, 0]
    return 0.5 * x1 + 0.1 * x1 * x1


def effect_surface(X: np.ndarray) -> np.ndarray:
    """Treatment effect surface: piecewise linear with a kink at zero."""
    z = X[:, 1] if X.shape[1] >= 2 else X[:, 0]
    return 1.0 + 0.25 * np.maximum(z, 0.0) - 0.1 * np.maximum(-z, 0.0)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def assignment_propensity(spec: DgpSpec, X: np.ndarray) -> np.ndarray:
    """Propensity used to draw the treatment (before any confounding)."""
    if spec.kind == "observational":
        z = X[:, 0] + (0.5 * X[:, 1] if spec.d >= 2 else 0.0)
        return np.clip(_sigmoid(z), *OBSERVATIONAL_PS_RANGE)
    # near_rct and the pre-modification draw of hidden_confounded
    ps = spec.base_rate + spec.rct_wiggle * np.tanh(X[:, 0])
    return np.clip(ps, *NEAR_RCT_PS_RANGE)


def generate(spec: DgpSpec) -> CausalDataset:
    """Draw one oracle-complete dataset from the configured regime."""
    rng = np.random.default_rng(spec.seed)
    X = rng.standard_normal((spec.n, spec.d))
    eps0 = spec.noise_sd * rng.standard_normal(spec.n)
    eps1 = spec.noise_sd * rng.standard_normal(spec.n)
    y0 = baseline_surface(X) + eps0
    y1 = baseline_surface(X) + effect_surface(X) + eps1

    ps = assignment_propensity(spec, X)
    t = (rng.uniform(size=spec.n) < ps).astype(np.int64)
    y = np.where(t == 1, y1, y0)

    if spec.kind == "hidden_confounded":
        # The counterfactual treated outcome of control rows is shifted,
        # which can never show up in the observed data; with the realized
        # treatment acting as a hidden confounder the true propensity is
        # the indicator itself.
        y1 = y1 + spec.offset * (t == 0)
        ps = t.astype(float)

    return CausalDataset(X, t, y, y1=y1, y0=y0, propensity=ps, sutva_atol=0.0)


def complete_loss(
    predict: Callable[[np.ndarray], np.ndarray],
    ds: CausalDataset,
    loss: DecomposableLoss,
    task: str = "outcome",
    arm: int = 1,
) -> float:
    """Average loss against the oracle targets, computable only here.

    ``task`` is "outcome" (predicting the potential outcome of ``arm``) or
    "cate" (predicting the difference of the potential outcomes, with
    ``predict`` returning effect estimates).
    """
    if not ds.has_oracle:
        raise DataError("complete loss needs oracle potential outcomes")
    preds = np.asarray(predict(ds.X), dtype=float)
    if task == "outcome":
        target = ds.y1 if arm == 1 else ds.y0
        return float(np.mean(loss.psi_capped(target - preds)))
    if task == "cate":
        target = ds.y1 - ds.y0
        return float(np.mean(loss.psi_capped(target - preds)))
    raise ValueError(f"unknown task {task!r}")


def parse_dgp(text: str) -> DgpSpec:
    """Parse a generator spec string.

    Examples: "near_rct:n=2000,d=10,seed=1", "observational:n=500,d=5",
    "hidden:offset=-20,n=1000,d=3,seed=2".
    """
    head, _, rest = text.strip().partition(":")
    aliases = {"hidden": "hidden_confounded"}
    kind = aliases.get(head, head)
    if kind not in DGP_KINDS:
        raise DataError(f"unknown dgp kind {head!r}")
    kwargs: dict = {"kind": kind, "n": 1000, "d": 5}
    int_keys = {"n", "d", "seed"}
    float_keys = {"noise_sd", "offset", "base_rate", "rct_wiggle"}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            if not value:
                raise DataError(f"malformed dgp option {item!r}")
            if key in int_keys:
                kwargs[key] = int(value)
            elif key in float_keys:
                kwargs[key] = float(value)
            else:
                raise DataError(f"unknown dgp option {key!r}")
    return DgpSpec(**kwargs)
