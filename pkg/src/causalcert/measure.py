"""Pearson chi-square divergence and the tuned change-of-measure envelope.

For probability measures Q and P the divergence is

    chi2(Q || P) = E_P[(dQ/dP - 1)^2]

and for any lam > 0 and any P-square-integrable phi,

    E_Q[phi] - E  <=  E_P[phi]  <=  E_Q[phi] + E,
    E = lam * chi2(Q || P) + Var_P(phi) / (4 * lam).

The envelope E is minimized at lam_star = sqrt(Var_P(phi) / (4 chi2)),
where it equals sqrt(chi2 * Var_P(phi)). Two degenerate cases get marker
values: chi2 == 0 gives lam_star = +inf and E = 0 (the bound collapses to
an equality, the randomized-trial case), and Var == 0 with chi2 > 0 gives
lam_star = 0 with E -> 0 in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDist:
    """A finite discrete distribution given as atoms and probabilities."""

    support: tuple
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "support", tuple(self.support))
        if len(self.support) != probs.shape[0]:
            raise ValueError("support and probs must have equal length")
        if probs.ndim != 1 or probs.shape[0] == 0:
            raise ValueError("probs must be a nonempty vector")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > PROB_SUM_TOL:
            raise ValueError("probabilities must sum to 1")


def chi2_discrete(q: DiscreteDist, p: DiscreteDist) -> float:
    """Closed-form chi2(q || p) on a shared finite support.

    Returns +inf when q puts mass where p does not (a positivity
    violation, reported as a value rather than an error).
    """
    if q.support != p.support:
        raise ValueError("distributions must share the same support")
    qp, pp = q.probs, p.probs
    if np.any((qp > 0.0) & (pp == 0.0)):
        return math.inf
    mask = pp > 0.0
    ratio = qp[mask] / pp[mask]
    return float(np.sum(pp[mask] * (ratio - 1.0) ** 2))


def chi2_from_ratios(ratios) -> float:
    """Monte-Carlo divergence from density ratios dQ/dP at P-samples.

    The estimator is mean((r - 1)^2) over the supplied ratios.
    """
    r = np.asarray(ratios, dtype=float)
    if r.size == 0:
        raise ValueError("need at least one ratio")
    if np.any(r < 0.0):
        raise ValueError("density ratios must be nonnegative")
    if np.any(np.isinf(r)):
        return math.inf
    return float(np.mean((r - 1.0) ** 2))


def optimal_lambda(chi2: float, var_p: float) -> float:
    """Envelope-minimizing tuning value, with markers for degenerate cases.

    Returns +inf when chi2 == 0 (equality case) and 0.0 when var_p == 0
    with chi2 > 0 (envelope vanishes as lam -> 0).
    """
    if chi2 < 0.0 or var_p < 0.0:
        raise ValueError("chi2 and var_p must be nonnegative")
    if chi2 == 0.0:
        return math.inf
    if var_p == 0.0:
        return 0.0
    return math.sqrt(var_p / (4.0 * chi2))


def envelope_value(chi2: float, var_p: float, lam: float) -> float:
    """E(lam) = lam * chi2 + var_p / (4 lam), honoring the lam markers."""
    if chi2 < 0.0 or var_p < 0.0:
        raise ValueError("chi2 and var_p must be nonnegative")
    if math.isinf(lam):
        return 0.0 if chi2 == 0.0 else math.inf
    if lam == 0.0:
        return 0.0 if var_p == 0.0 else math.inf
    if lam < 0.0:
        raise ValueError("lam must be positive")
    return lam * chi2 + var_p / (4.0 * lam)


@dataclass(frozen=True)
class ChangeOfMeasureBound:
    """Two-sided bound on E_P[phi] around an estimate of E_Q[phi]."""

    eq_mean: float
    chi2: float
    var_p: float
    lam: float
    envelope: float
    lower: float
    upper: float

    @property
    def is_exact(self) -> bool:
        return self.chi2 == 0.0


def change_of_measure(
    eq_mean: float, chi2: float, var_p: float, lam: float | None = None
) -> ChangeOfMeasureBound:
    """Assemble the two-sided envelope bound at lam (default: optimal)."""
    if chi2 < 0.0 or var_p < 0.0:
        raise ValueError("chi2 and var_p must be nonnegative")
    if lam is None:
        lam = optimal_lambda(chi2, var_p)
    elif not lam > 0.0:
        raise ValueError("lam must be positive")
    env = envelope_value(chi2, var_p, lam)
    return ChangeOfMeasureBound(
        eq_mean=float(eq_mean),
        chi2=float(chi2),
        var_p=float(var_p),
        lam=float(lam),
        envelope=env,
        lower=float(eq_mean) - env,
        upper=float(eq_mean) + env,
    )
