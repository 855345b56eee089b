"""Losses of the form l(y, yhat) = psi(y - yhat), with range caps.

Every supported loss decomposes through a nonnegative psi with psi(0) = 0
that satisfies a relaxed triangle inequality

    psi(x +/- y) <= C * (psi(x) + psi(y))

for a kind-specific constant C >= 1. The finite-sample certificates also
need the loss bounded in [0, M]; squared, absolute and quantile losses are
unbounded, so evaluations can be capped at an explicit ``clip_m``. The cap
is chosen by the certification pipeline (a high percentile of observed
losses) and frozen into the certificate, which keeps M auditable.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

LOSS_KINDS = ("squared", "absolute", "quantile", "zero_one")


class LossDomainError(ValueError):
    """Raised when a loss is evaluated outside its domain."""


@dataclass(frozen=True)
class LossConstants:
    """Subadditivity constant C and range bound M of a loss."""

    C: float
    M: float


@dataclass(frozen=True)
class DecomposableLoss:
    """A loss l(y, yhat) = psi(y - yhat).

    Parameters
    ----------
    kind : one of "squared", "absolute", "quantile", "zero_one".
    alpha : quantile level, required iff kind == "quantile".
    clip_m : optional range cap; evaluations return min(psi, clip_m).
    """

    kind: str
    alpha: float | None = None
    clip_m: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "quantile":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("quantile loss needs alpha in (0, 1)")
        elif self.alpha is not None:
            raise ValueError(f"alpha only applies to the quantile loss")
        if self.clip_m is not None and not self.clip_m > 0.0:
            raise ValueError("clip_m must be positive")

    # -- core evaluations ---------------------------------------------------

    def psi(self, x):
        """Raw psi(x), uncapped. Accepts scalars or arrays."""
        x = np.asarray(x, dtype=float)
        if self.kind == "squared":
            out = x * x
        elif self.kind in ("absolute", "zero_one"):
            out = np.abs(x)
        else:  # quantile (pinball)
            out = np.where(x >= 0.0, x * self.alpha, -x * (1.0 - self.alpha))
        return float(out) if out.ndim == 0 else out

    def psi_capped(self, x):
        """psi(x) capped at clip_m when a cap is set."""
        out = self.psi(x)
        if self.clip_m is not None:
            out = np.minimum(out, self.clip_m)
            out = float(out) if np.ndim(out) == 0 else out
        return out

    def eval(self, y, yhat):
        """Capped loss of predicting yhat against y.

        For the zero_one kind both arguments must take values in {0, 1}.
        """
        y = np.asarray(y, dtype=float)
        yhat = np.asarray(yhat, dtype=float)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yhat))):
            raise LossDomainError("loss arguments must be finite")
        if self.kind == "zero_one":
            for name, v in (("y", y), ("yhat", yhat)):
                if not np.all((v == 0.0) | (v == 1.0)):
                    raise LossDomainError(
                        f"zero_one loss requires {name} in {{0, 1}}"
                    )
        return self.psi_capped(y - yhat)

    # -- constants and derived evaluators -----------------------------------

    def subadditivity_constant(self) -> float:
        if self.kind == "squared":
            return 2.0
        if self.kind == "quantile":
            a = self.alpha
            return max(a, 1.0 - a) / min(a, 1.0 - a)
        return 1.0  # absolute, zero_one

    def range_bound(self) -> float:
        if self.clip_m is not None:
            return self.clip_m
        if self.kind == "zero_one":
            return 1.0
        return math.inf

    def constants(self) -> LossConstants:
        return LossConstants(C=self.subadditivity_constant(), M=self.range_bound())

    def with_clip(self, clip_m: float) -> "DecomposableLoss":
        return dataclasses.replace(self, clip_m=float(clip_m))

    def scaled(self, scale_fn: Callable[[np.ndarray], np.ndarray]) -> "ScaledLoss":
        return ScaledLoss(self, scale_fn)

    def spec_string(self) -> str:
        if self.kind == "quantile":
            return f"quantile:{self.alpha:g}"
        return self.kind


class ScaledLoss:
    """Evaluator for l(e(x) * y, e(x) * yhat) = psi(e(x) * (y - yhat)).

    ``scale_fn`` must map covariates into [0, 1]; values outside raise.
    Used by the X-learner terms where the blend e(x) and its complement
    rescale the residuals of each stage.
    """

    def __init__(self, base: DecomposableLoss, scale_fn: Callable) -> None:
        self.base = base
        self.scale_fn = scale_fn

    def scale_values(self, X: np.ndarray) -> np.ndarray:
        e = np.asarray(self.scale_fn(X), dtype=float)
        if np.any((e < 0.0) | (e > 1.0)):
            raise LossDomainError("scale values must lie in [0, 1]")
        return e

    def eval(self, X, y, yhat):
        e = self.scale_values(np.asarray(X))
        y = np.asarray(y, dtype=float)
        yhat = np.asarray(yhat, dtype=float)
        return self.base.psi_capped(e * (y - yhat))

    __call__ = eval


def scaled_loss(loss: DecomposableLoss, scale_fn: Callable) -> ScaledLoss:
    return loss.scaled(scale_fn)


def parse_loss(text: str) -> DecomposableLoss:
    """Parse a loss spec string: "squared", "absolute", "quantile:0.8",
    "zero_one"."""
    text = text.strip()
    if text.startswith("quantile"):
        parts = text.split(":", 1)
        if len(parts) != 2:
            raise ValueError("quantile loss spec must look like 'quantile:0.8'")
        return DecomposableLoss("quantile", alpha=float(parts[1]))
    if text in ("squared", "absolute", "zero_one"):
        return DecomposableLoss(text)
    raise ValueError(f"unknown loss spec {text!r}")
