"""Certificate assembly: auditable upper bounds on counterfactual losses.

A certificate decomposes its bound into an ordered list of nonnegative
addends (observable loss, divergence and variance charges, complexity
terms, a finite-sample tail) plus an outer scale factor (1 for outcome
regression, the loss subadditivity constant C for T/S-learners, C^2 for
X-learners). The reported upper bound is exactly

    upper_bound = scale * (a_1 + a_2 + ... + a_k)

summed left to right, so re-summing the serialized document reproduces it
bit for bit. Infinite divergences or weights (positivity violations) make
the bound infinite and set a vacuous flag instead of raising.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import CausalDataset, DataError, arm_counts
from .losses import DecomposableLoss
from .measure import envelope_value, optimal_lambda
from .weights import WeightFn

# =============================================================================
# Divergence estimates
# =============================================================================


@dataclass(frozen=True)
class DeltaEstimate:
    """Estimated divergence between reweighted-observed and complete data.

    ``theoretic_oracle`` uses the true (oracle) propensities; ``empirical``
    is the observable relaxation, a squared-weight Brier term plus a
    balance term.
    """

    kind: str  # "theoretic_oracle" | "empirical"
    value: float
    arm: int
    p_hat: float
    n: int
    p_source: str
    brier_term: float | None = None
    balance_term: float | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "arm": self.arm,
            "p_hat": self.p_hat,
            "n": self.n,
            "p_source": self.p_source,
            "brier_term": self.brier_term,
            "balance_term": self.balance_term,
        }


def _arm_probability(ds: CausalDataset, arm: int) -> float:
    counts = arm_counts(ds)
    return counts.p_hat_t1 if arm == 1 else 1.0 - counts.p_hat_t1


def delta_theoretic(ds: CausalDataset, w: WeightFn, arm: int) -> DeltaEstimate:
    """Oracle divergence: mean of (w(x) * ps_a(x) / p_a - 1)^2 over all rows.

    The marginal arm probability p_a is estimated as the mean of the
    oracle propensities, which is exact for constant-propensity designs
    (where the divergence is then exactly zero for w == 1).
    """
    if not ds.has_oracle:
        raise DataError("theoretic divergence needs oracle propensities")
    ps_a = ds.propensity if arm == 1 else 1.0 - ds.propensity
    p = float(np.mean(ps_a))
    if w.positivity_violated or p == 0.0:
        value = math.inf
    else:
        ratios = w(ds.X) * ps_a / p
        value = float(np.mean((ratios - 1.0) ** 2))
    return DeltaEstimate(
        kind="theoretic_oracle", value=value, arm=arm, p_hat=p, n=ds.n,
        p_source="oracle_propensity_mean",
    )


def delta_empirical(
    ds: CausalDataset, w: WeightFn, nu, arm: int
) -> DeltaEstimate:
    """Observable divergence bound: squared-weight Brier term plus balance.

    value = (2 / p^2) * mean(w^2 (nu_a - 1[t=a])^2)
          +  2        * mean((w * 1[t=a] / p - 1)^2)

    with p the arm frequency of the supplied sample and nu_a the predicted
    probability of the queried arm.
    """
    p = _arm_probability(ds, arm)
    if p == 0.0:
        raise DataError(f"arm {arm} is empty")
    if w.positivity_violated:
        return DeltaEstimate(
            kind="empirical", value=math.inf, arm=arm, p_hat=p, n=ds.n,
            p_source="arm_frequency", brier_term=math.inf, balance_term=math.inf,
        )
    wv = w(ds.X)
    proba = np.asarray(nu.predict_proba(ds.X), dtype=float)
    nu_a = proba if arm == 1 else 1.0 - proba
    ind = (ds.t == arm).astype(float)
    brier = (2.0 / p**2) * float(np.mean(wv**2 * (nu_a - ind) ** 2))
    balance = 2.0 * float(np.mean((wv * ind / p - 1.0) ** 2))
    return DeltaEstimate(
        kind="empirical", value=brier + balance, arm=arm, p_hat=p, n=ds.n,
        p_source="arm_frequency", brier_term=brier, balance_term=balance,
    )


# =============================================================================
# Variance caps and complexity estimates
# =============================================================================


@dataclass(frozen=True)
class VarianceCap:
    """An upper bound on the variance of the complete loss.

    Never estimated from counterfactual samples: either the range-based
    cap M^2 / 4 or a value the user asserts.
    """

    source: str  # "popoviciu" | "user_asserted"
    value: float

    def to_dict(self) -> dict:
        return {"source": self.source, "value": self.value}


def popoviciu_cap(m: float) -> VarianceCap:
    """Variance cap M^2 / 4 for a loss supported in [0, M]."""
    if m < 0.0:
        raise ValueError("range bound must be nonnegative")
    return VarianceCap(source="popoviciu", value=m * m / 4.0)


def asserted_cap(value: float) -> VarianceCap:
    if value < 0.0:
        raise ValueError("variance cap must be nonnegative")
    return VarianceCap(source="user_asserted", value=float(value))


@dataclass(frozen=True)
class ComplexityEstimate:
    """Complexity of a finite ensemble of candidate functions.

    ``massart_finite_class`` uses M * sqrt(2 ln k / n); the Monte-Carlo
    method averages, over random sign vectors, the best correlation any
    ensemble member achieves with the signs (clamped at zero, which only
    tightens toward the true nonnegative value).
    """

    method: str
    value: float
    ensemble_size: int
    n: int
    range_m: float
    n_sigma: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "value": self.value,
            "ensemble_size": self.ensemble_size,
            "n": self.n,
            "range_m": self.range_m,
            "n_sigma": self.n_sigma,
            "seed": self.seed,
        }


COMPLEXITY_METHODS = (
    "massart_finite_class",
    "monte_carlo_finite_class",
    "user_supplied",
)


def rademacher_estimate(
    method: str,
    ensemble_losses,
    range_m: float,
    n_sigma: int = 200,
    seed: int = 0,
) -> ComplexityEstimate:
    """Complexity of a k x n matrix of per-sample values in [0, range_m]."""
    if method not in ("massart_finite_class", "monte_carlo_finite_class"):
        raise ValueError(f"unknown complexity method {method!r}")
    G = np.atleast_2d(np.asarray(ensemble_losses, dtype=float))
    k, n = G.shape
    if k < 1 or n < 1:
        raise ValueError("ensemble must be a nonempty k x n matrix")
    if np.any(G < 0.0) or np.any(G > range_m + 1e-12):
        raise ValueError("ensemble values must lie in [0, range_m]")
    if method == "massart_finite_class":
        value = range_m * math.sqrt(2.0 * math.log(k) / n)
        return ComplexityEstimate(method, value, k, n, range_m)
    rng = np.random.default_rng(seed)
    sigma = rng.choice([-1.0, 1.0], size=(n_sigma, n))
    sup_corr = (sigma @ G.T / n).max(axis=1)
    value = max(0.0, float(sup_corr.mean()))
    return ComplexityEstimate(method, value, k, n, range_m, n_sigma, seed)


def singleton_complexity(n: int, range_m: float) -> ComplexityEstimate:
    """Complexity of a single fitted model: zero under the finite-class bound."""
    return ComplexityEstimate("massart_finite_class", 0.0, 1, n, range_m)


def user_complexity(value: float, n: int) -> ComplexityEstimate:
    if value < 0.0:
        raise ValueError("complexity must be nonnegative")
    return ComplexityEstimate("user_supplied", float(value), 0, n, math.nan)


# =============================================================================
# Finite-sample constants
# =============================================================================


def weight_range_constant(w_max: float, p_hats) -> float:
    """Range constant of the divergence summands over the listed arms.

    sum_a (w_max / p_a)^2 + sum_a max(1, (w_max / p_a - 1)^2); a single
    arm for outcome certificates, both arms for meta-learner ones.
    """
    p_hats = np.atleast_1d(np.asarray(p_hats, dtype=float))
    if np.any(p_hats <= 0.0):
        return math.inf
    ratios = w_max / p_hats
    return float(np.sum(ratios**2) + np.sum(np.maximum(1.0, (ratios - 1.0) ** 2)))


def arm_balance_factor(n_t1: int, n_t0: int) -> float:
    """c = 1 + sqrt(n_min / n_other), between 1 and 2, 2 at balance."""
    if n_t1 <= 0 or n_t0 <= 0:
        raise DataError("both arms must be nonempty")
    n_min, n_other = min(n_t1, n_t0), max(n_t1, n_t0)
    return 1.0 + math.sqrt(n_min / n_other)


def _tail(log_arg: float, delta_conf: float, n_eff: int, lead: float,
          range_const: float, n_frac: float) -> float:
    return (lead + range_const * math.sqrt(n_frac)) * math.sqrt(
        math.log(log_arg / delta_conf) / (2.0 * n_eff)
    )


def outcome_tail(m: float, w_max: float, p_hat: float, n_arm: int, n: int,
                 delta_conf: float) -> float:
    """(M w_max + C(w_max) sqrt(n_a / n)) * sqrt(log(2/delta) / (2 n_a))."""
    cw = weight_range_constant(w_max, [p_hat])
    return _tail(2.0, delta_conf, n_arm, m * w_max, cw, n_arm / n)


def tlearner_tail(m: float, w_max: float, p_t1: float, p_t0: float,
                  n_t1: int, n_t0: int, delta_conf: float) -> float:
    """(c M w_max + C(w_max) sqrt(n_min / n)) * sqrt(log(3/delta) / (2 n_min))."""
    n = n_t1 + n_t0
    n_min = min(n_t1, n_t0)
    c = arm_balance_factor(n_t1, n_t0)
    cw = weight_range_constant(w_max, [p_t1, p_t0])
    return _tail(3.0, delta_conf, n_min, c * m * w_max, cw, n_min / n)


def xlearner_tail(m: float, w_max: float, p_t1: float, p_t0: float,
                  n_t1: int, n_t0: int, delta_conf: float) -> float:
    """(2c M w_max + C(w_max) sqrt(n_min / n)) * sqrt(log(5/delta) / (2 n_min))."""
    n = n_t1 + n_t0
    n_min = min(n_t1, n_t0)
    c = arm_balance_factor(n_t1, n_t0)
    cw = weight_range_constant(w_max, [p_t1, p_t0])
    return _tail(5.0, delta_conf, n_min, 2.0 * c * m * w_max, cw, n_min / n)


def envelope_parts(chi2: float, var: float, lam: float) -> tuple[float, float]:
    """The two envelope addends (lam * chi2, var / (4 lam)) with markers."""
    if math.isinf(lam):
        return (0.0 if chi2 == 0.0 else math.inf, 0.0)
    if lam == 0.0:
        return (0.0, 0.0 if var == 0.0 else math.inf)
    return (lam * chi2, var / (4.0 * lam))


def _resolve_lambda(lam: float | None, chi2: float, var: float) -> tuple[float, str]:
    if lam is None:
        return optimal_lambda(chi2, var), "optimal"
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    return float(lam), "user"


# =============================================================================
# Certificates
# =============================================================================


@dataclass(frozen=True)
class Addend:
    name: str
    value: float
    term: str    # observable_loss | divergence | variance | complexity | tail
    source: str  # empirical | oracle | cap | formula | user

    def to_dict(self) -> dict:
        return {
            "name": self.name, "value": self.value,
            "term": self.term, "source": self.source,
        }


@dataclass
class BoundCertificate:
    """An upper bound with the full provenance of every addend."""

    task: str
    bound_kind: str  # "expectation" | "pac"
    scale: float
    scale_name: str
    addends: list
    upper_bound: float
    lambdas: dict
    deltas: dict
    variance: dict
    complexity: dict
    constants: dict
    flags: dict
    notes: list

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "bound_kind": self.bound_kind,
            "scale": self.scale,
            "scale_name": self.scale_name,
            "combination": "upper_bound = scale * sum(addends, left to right)",
            "addends": [a.to_dict() for a in self.addends],
            "upper_bound": self.upper_bound,
            "lambdas": self.lambdas,
            "deltas": {k: v.to_dict() for k, v in self.deltas.items()},
            "variance": {k: v.to_dict() for k, v in self.variance.items()},
            "complexity": {k: v.to_dict() for k, v in self.complexity.items()},
            "constants": self.constants,
            "flags": self.flags,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @property
    def is_vacuous(self) -> bool:
        return bool(self.flags.get("vacuous_positivity"))


def resum_certificate(doc: dict) -> float:
    """Recompute the bound from a serialized certificate document.

    Matches the construction arithmetic exactly: left-to-right addition of
    the addend values, then one multiplication by the scale.
    """
    total = 0.0
    for addend in doc["addends"]:
        total += addend["value"]
    return doc["scale"] * total


def _finish(task, bound_kind, scale, scale_name, addends, lambdas, deltas,
            variance, complexity, constants, flags, notes) -> BoundCertificate:
    total = 0.0
    for addend in addends:
        total += addend.value
    upper = scale * total
    flags = dict(flags)
    flags.setdefault("vacuous_positivity", not math.isfinite(upper))
    return BoundCertificate(
        task=task, bound_kind=bound_kind, scale=scale, scale_name=scale_name,
        addends=addends, upper_bound=upper, lambdas=lambdas, deltas=deltas,
        variance=variance, complexity=complexity, constants=constants,
        flags=flags, notes=notes,
    )


def outcome_bound_expectation(
    obs_loss: float,
    delta: DeltaEstimate,
    var_cap: VarianceCap,
    lam: float | None = None,
    constants: dict | None = None,
    notes: list | None = None,
) -> BoundCertificate:
    """Expectation-level outcome bound: obs + lam*delta + var/(4 lam)."""
    if obs_loss < 0.0:
        raise ValueError("observable loss must be nonnegative")
    lam, lam_source = _resolve_lambda(lam, delta.value, var_cap.value)
    div, var = envelope_parts(delta.value, var_cap.value, lam)
    addends = [
        Addend("observable_loss", float(obs_loss), "observable_loss",
               "oracle" if delta.kind == "theoretic_oracle" else "empirical"),
        Addend("divergence_charge", div, "divergence",
               "oracle" if delta.kind == "theoretic_oracle" else "empirical"),
        Addend("variance_charge", var, "variance", "cap"),
    ]
    flags = {
        "oracle_mode": delta.kind == "theoretic_oracle",
        "exact_rct": delta.value == 0.0,
    }
    return _finish(
        "outcome", "expectation", 1.0, "1", addends,
        {"lam": {"value": lam, "source": lam_source}},
        {"delta": delta}, {"var_cap": var_cap}, {},
        constants or {}, flags, notes or [],
    )


def tlearner_bound_expectation(
    obs1: float, obs0: float,
    d1: DeltaEstimate, d0: DeltaEstimate,
    v1: VarianceCap, v0: VarianceCap,
    c_loss: float,
    lam1: float | None = None, lam0: float | None = None,
    task: str = "t_learner",
    constants: dict | None = None,
    notes: list | None = None,
) -> BoundCertificate:
    """Expectation-level T-/S-learner bound: C * (sum of per-arm terms)."""
    if min(obs1, obs0) < 0.0 or c_loss < 1.0:
        raise ValueError("invalid bound inputs")
    lam1, src1 = _resolve_lambda(lam1, d1.value, v1.value)
    lam0, src0 = _resolve_lambda(lam0, d0.value, v0.value)
    div1, var1 = envelope_parts(d1.value, v1.value, lam1)
    div0, var0 = envelope_parts(d0.value, v0.value, lam0)
    src = "oracle" if d1.kind == "theoretic_oracle" else "empirical"
    addends = [
        Addend("observable_loss_t1", float(obs1), "observable_loss", "empirical"),
        Addend("observable_loss_t0", float(obs0), "observable_loss", "empirical"),
        Addend("divergence_charge_t1", div1, "divergence", src),
        Addend("divergence_charge_t0", div0, "divergence", src),
        Addend("variance_charge_t1", var1, "variance", "cap"),
        Addend("variance_charge_t0", var0, "variance", "cap"),
    ]
    flags = {
        "oracle_mode": d1.kind == "theoretic_oracle",
        "exact_rct": d1.value == 0.0 and d0.value == 0.0,
    }
    return _finish(
        task, "expectation", float(c_loss), "C", addends,
        {"lam1": {"value": lam1, "source": src1},
         "lam0": {"value": lam0, "source": src0}},
        {"delta_t1": d1, "delta_t0": d0},
        {"var_cap_t1": v1, "var_cap_t0": v0}, {},
        constants or {}, flags, notes or [],
    )


def xlearner_bound_expectation(
    obs_h1: float, obs_h0: float, obs_tau1: float, obs_tau0: float,
    d1: DeltaEstimate, d0: DeltaEstimate,
    v_h1: VarianceCap, v_h0: VarianceCap,
    v_tau1: VarianceCap, v_tau0: VarianceCap,
    c_loss: float,
    lam1: float | None = None, lam0: float | None = None,
    lam10: float | None = None, lam01: float | None = None,
    constants: dict | None = None,
    notes: list | None = None,
) -> BoundCertificate:
    """Expectation-level X-learner bound: C^2 * (four observable terms,
    divergence charges (lam1 + lam10) d1 + (lam0 + lam01) d0, and four
    variance envelopes).

    The four tuning values separate: each pairs one divergence with one
    variance cap, so the defaults optimize each envelope independently.
    """
    for v in (obs_h1, obs_h0, obs_tau1, obs_tau0):
        if v < 0.0:
            raise ValueError("observable losses must be nonnegative")
    if c_loss < 1.0:
        raise ValueError("subadditivity constant must be >= 1")
    lam1, s1 = _resolve_lambda(lam1, d1.value, v_h1.value)
    lam10, s10 = _resolve_lambda(lam10, d1.value, v_tau1.value)
    lam0, s0 = _resolve_lambda(lam0, d0.value, v_h0.value)
    lam01, s01 = _resolve_lambda(lam01, d0.value, v_tau0.value)
    div_h1, var_h1 = envelope_parts(d1.value, v_h1.value, lam1)
    div_tau1, var_tau1 = envelope_parts(d1.value, v_tau1.value, lam10)
    div_h0, var_h0 = envelope_parts(d0.value, v_h0.value, lam0)
    div_tau0, var_tau0 = envelope_parts(d0.value, v_tau0.value, lam01)
    src = "oracle" if d1.kind == "theoretic_oracle" else "empirical"
    addends = [
        Addend("observable_loss_h1", float(obs_h1), "observable_loss", "empirical"),
        Addend("observable_loss_h0", float(obs_h0), "observable_loss", "empirical"),
        Addend("observable_loss_tau1", float(obs_tau1), "observable_loss", "empirical"),
        Addend("observable_loss_tau0", float(obs_tau0), "observable_loss", "empirical"),
        Addend("divergence_charge_h1", div_h1, "divergence", src),
        Addend("divergence_charge_tau1", div_tau1, "divergence", src),
        Addend("divergence_charge_h0", div_h0, "divergence", src),
        Addend("divergence_charge_tau0", div_tau0, "divergence", src),
        Addend("variance_charge_h1", var_h1, "variance", "cap"),
        Addend("variance_charge_h0", var_h0, "variance", "cap"),
        Addend("variance_charge_tau1", var_tau1, "variance", "cap"),
        Addend("variance_charge_tau0", var_tau0, "variance", "cap"),
    ]
    flags = {
        "oracle_mode": d1.kind == "theoretic_oracle",
        "exact_rct": d1.value == 0.0 and d0.value == 0.0,
    }
    return _finish(
        "x_learner", "expectation", float(c_loss) ** 2, "C^2", addends,
        {"lam1": {"value": lam1, "source": s1},
         "lam10": {"value": lam10, "source": s10},
         "lam0": {"value": lam0, "source": s0},
         "lam01": {"value": lam01, "source": s01}},
        {"delta_t1": d1, "delta_t0": d0},
        {"var_cap_h1": v_h1, "var_cap_h0": v_h0,
         "var_cap_tau1": v_tau1, "var_cap_tau0": v_tau0}, {},
        constants or {}, flags, notes or [],
    )


# =============================================================================
# Observable losses and the finite-sample pipeline
# =============================================================================


def observable_outcome_loss(predict, ds: CausalDataset, loss: DecomposableLoss,
                            w: WeightFn, arm: int) -> float:
    """Weighted mean loss over the rows of one arm: the observable term."""
    mask = ds.arm_mask(arm)
    if not np.any(mask):
        raise DataError(f"arm {arm} is empty")
    X, y = ds.X[mask], ds.y[mask]
    preds = np.asarray(predict(X), dtype=float)
    return float(np.mean(w(X) * loss.eval(y, preds)))


def _raw_outcome_losses(predict, ds, loss, arm):
    mask = ds.arm_mask(arm)
    preds = np.asarray(predict(ds.X[mask]), dtype=float)
    if loss.kind == "zero_one":
        preds = (preds >= 0.5).astype(float)
    return loss.psi(ds.y[mask] - preds)


def freeze_clip(loss: DecomposableLoss, raw_losses, percentile: float = 99.5
                ) -> tuple[DecomposableLoss, dict]:
    """Freeze the range cap at a percentile of raw observed losses.

    zero_one is naturally bounded at 1; a user-set cap is kept as is. The
    cap is floored at a tiny positive value so that perfectly fit training
    data still yields a valid (degenerate) range.
    """
    if loss.clip_m is not None:
        return loss, {"clip_source": "user", "clip_m": loss.clip_m}
    if loss.kind == "zero_one":
        frozen = loss.with_clip(1.0)
        return frozen, {"clip_source": "range", "clip_m": 1.0}
    arrays = [np.asarray(a, dtype=float) for a in raw_losses]
    per_arm = [float(np.percentile(a, percentile)) for a in arrays if a.size]
    m = max(max(per_arm), 1e-12)
    frozen = loss.with_clip(m)
    meta = {
        "clip_source": f"percentile:{percentile:g}",
        "clip_m": m,
        "per_arm_percentiles": per_arm,
    }
    return frozen, meta


def _complexity_pair(ensemble_h, ensemble_nu, method, range_h, range_nu,
                     n_h, n_nu, n_sigma, seed):
    if ensemble_h is None:
        r_h = singleton_complexity(n_h, range_h)
    else:
        r_h = rademacher_estimate(method, ensemble_h, range_h, n_sigma, seed)
    if ensemble_nu is None:
        r_nu = singleton_complexity(n_nu, range_nu)
    else:
        r_nu = rademacher_estimate(method, ensemble_nu, range_nu, n_sigma, seed + 1)
    return r_h, r_nu


def pac_outcome_certificate(
    model, ds_train: CausalDataset, ds_cert: CausalDataset,
    loss: DecomposableLoss, w: WeightFn, nu, arm: int = 1,
    delta_conf: float = 0.05, lam: float | None = None,
    ensemble_h=None, ensemble_nu=None,
    complexity_method: str = "massart_finite_class",
    n_sigma: int = 200, seed: int = 0, clip_percentile: float = 99.5,
) -> BoundCertificate:
    """Finite-sample certificate for outcome regression of one arm.

    Assembles the empirical weighted loss, the divergence and variance
    charges at the tuning value, two complexity terms and the
    finite-sample tail, holding with probability 1 - delta_conf.
    """
    if not 0.0 < delta_conf < 1.0:
        raise ValueError("delta_conf must lie in (0, 1)")
    counts = arm_counts(ds_cert)
    n_arm = counts.n_t1 if arm == 1 else counts.n_t0
    if n_arm == 0:
        raise DataError(f"certification split has no samples in arm {arm}")
    p_hat = n_arm / counts.n

    predict = lambda X: model.predict(X)
    raw = _raw_outcome_losses(predict, ds_train, loss, arm)
    frozen, clip_meta = freeze_clip(loss, [raw], clip_percentile)
    m = frozen.clip_m

    def eval_predict(X):
        out = np.asarray(model.predict(X), dtype=float)
        return (out >= 0.5).astype(float) if loss.kind == "zero_one" else out

    obs = observable_outcome_loss(eval_predict, ds_cert, frozen, w, arm)
    dhat = delta_empirical(ds_cert, w, nu, arm)
    w_cert = w(ds_cert.X)
    w_max = w.w_max if w.positivity_violated else float(
        max(w.w_max, np.max(w_cert))
    )
    lam, lam_source = _resolve_lambda(lam, dhat.value, m * m / 4.0)
    div, var = envelope_parts(dhat.value, m * m / 4.0, lam)

    cw = weight_range_constant(w_max, [p_hat])
    r_h, r_nu = _complexity_pair(
        ensemble_h, ensemble_nu, complexity_method,
        range_h=w_max * m, range_nu=cw, n_h=n_arm, n_nu=counts.n,
        n_sigma=n_sigma, seed=seed,
    )
    tail = outcome_tail(m, w_max, p_hat, n_arm, counts.n, delta_conf)

    addends = [
        Addend("observable_loss", obs, "observable_loss", "empirical"),
        Addend("divergence_charge", div, "divergence", "empirical"),
        Addend("variance_charge", var, "variance", "cap"),
        Addend("complexity_h", 2.0 * r_h.value, "complexity", "formula"),
        Addend("complexity_nu", 2.0 * r_nu.value, "complexity", "formula"),
        Addend("tail", tail, "tail", "formula"),
    ]
    constants = {
        "arm": arm, "n": counts.n, "n_t1": counts.n_t1, "n_t0": counts.n_t0,
        "p_hat": p_hat, "m": m, "w_max": w_max, "weight_range_constant": cw,
        "delta_conf": delta_conf, **clip_meta,
    }
    flags = {"oracle_mode": False,
             "vacuous_positivity": w.positivity_violated or not math.isfinite(dhat.value)}
    notes = [
        "arm probability estimated from the certification split",
        "weight normalization frozen on the training arm sample mean",
        "divergence, loss and weight statistics computed on a held-out "
        "certification split; the finite-ensemble complexity terms carry "
        "the uniformity over candidate models",
    ]
    return _finish(
        "outcome", "pac", 1.0, "1", addends,
        {"lam": {"value": lam, "source": lam_source}},
        {"delta": dhat}, {"var_cap": VarianceCap("popoviciu", m * m / 4.0)},
        {"r_h": r_h, "r_nu": r_nu}, constants, flags, notes,
    )


def pac_meta_certificate(
    model, ds_train: CausalDataset, ds_cert: CausalDataset,
    loss: DecomposableLoss, w1: WeightFn, w0: WeightFn, nu,
    delta_conf: float = 0.05,
    lam1: float | None = None, lam0: float | None = None,
    ensemble_h1=None, ensemble_h0=None, ensemble_nu=None,
    complexity_method: str = "massart_finite_class",
    n_sigma: int = 200, seed: int = 0, clip_percentile: float = 99.5,
) -> BoundCertificate:
    """Finite-sample certificate for a T-, S- or X-learner.

    T/S: C * (obs1 + obs0 + envelope charges with var M^2/(16 lam) + 2R
    terms + tail with log(3/delta)). X: C^2 * (four observable stage terms
    + charges with var M^2/(4 lam) + doubled head complexities + tail with
    log(5/delta) and a doubled lead factor).
    """
    from .metalearners import SLearner, TLearner, XLearner

    if not 0.0 < delta_conf < 1.0:
        raise ValueError("delta_conf must lie in (0, 1)")
    counts = arm_counts(ds_cert)
    if counts.n_t1 == 0 or counts.n_t0 == 0:
        raise DataError("certification split needs both arms")
    p1, p0 = counts.p_hat_t1, 1.0 - counts.p_hat_t1

    is_x = isinstance(model, XLearner)
    task = (
        "x_learner" if is_x
        else "t_learner" if isinstance(model, TLearner) else "s_learner"
    )

    # range cap from raw training losses of every observable stage
    raw_arrays = [
        _raw_outcome_losses(lambda X: model.predict_outcome(X, 1), ds_train, loss, 1),
        _raw_outcome_losses(lambda X: model.predict_outcome(X, 0), ds_train, loss, 0),
    ]
    if is_x:
        raw_arrays += [
            _raw_stage2_losses(model, ds_train, loss, arm=1),
            _raw_stage2_losses(model, ds_train, loss, arm=0),
        ]
    frozen, clip_meta = freeze_clip(loss, raw_arrays, clip_percentile)
    m = frozen.clip_m

    d1 = delta_empirical(ds_cert, w1, nu, 1)
    d0 = delta_empirical(ds_cert, w0, nu, 0)
    pos_violated = w1.positivity_violated or w0.positivity_violated
    if pos_violated:
        w_max = math.inf
    else:
        w_max = float(max(
            w1.w_max, w0.w_max,
            np.max(w1(ds_cert.X)), np.max(w0(ds_cert.X)),
        ))

    c_loss = frozen.subadditivity_constant()
    var_for_lam = m * m if is_x else m * m / 4.0
    lam1, s1 = _resolve_lambda(lam1, d1.value, var_for_lam)
    lam0, s0 = _resolve_lambda(lam0, d0.value, var_for_lam)
    div1, var1 = envelope_parts(d1.value, var_for_lam, lam1)
    div0, var0 = envelope_parts(d0.value, var_for_lam, lam0)

    cw = weight_range_constant(w_max, [p1, p0])
    r_h1, r_nu = _complexity_pair(
        ensemble_h1, ensemble_nu, complexity_method,
        range_h=w_max * m, range_nu=cw,
        n_h=counts.n_t1, n_nu=counts.n, n_sigma=n_sigma, seed=seed,
    )
    if ensemble_h0 is None:
        r_h0 = singleton_complexity(counts.n_t0, w_max * m)
    else:
        r_h0 = rademacher_estimate(
            complexity_method, ensemble_h0, w_max * m, n_sigma, seed + 2
        )

    if is_x:
        obs_h1, obs_h0, obs_tau1, obs_tau0 = xlearner_observable_terms(
            model, ds_cert, frozen, w1, w0
        )
        tail = xlearner_tail(m, w_max, p1, p0, counts.n_t1, counts.n_t0, delta_conf)
        rad_factor = 4.0
        addends = [
            Addend("observable_loss_h1", obs_h1, "observable_loss", "empirical"),
            Addend("observable_loss_h0", obs_h0, "observable_loss", "empirical"),
            Addend("observable_loss_tau1", obs_tau1, "observable_loss", "empirical"),
            Addend("observable_loss_tau0", obs_tau0, "observable_loss", "empirical"),
        ]
        scale, scale_name = c_loss**2, "C^2"
    else:
        obs1 = observable_outcome_loss(
            lambda X: model.predict_outcome(X, 1), ds_cert, frozen, w1, 1
        )
        obs0 = observable_outcome_loss(
            lambda X: model.predict_outcome(X, 0), ds_cert, frozen, w0, 0
        )
        tail = tlearner_tail(m, w_max, p1, p0, counts.n_t1, counts.n_t0, delta_conf)
        rad_factor = 2.0
        addends = [
            Addend("observable_loss_t1", obs1, "observable_loss", "empirical"),
            Addend("observable_loss_t0", obs0, "observable_loss", "empirical"),
        ]
        scale, scale_name = c_loss, "C"

    addends += [
        Addend("divergence_charge_t1", div1, "divergence", "empirical"),
        Addend("divergence_charge_t0", div0, "divergence", "empirical"),
        Addend("variance_charge_t1", var1, "variance", "cap"),
        Addend("variance_charge_t0", var0, "variance", "cap"),
        Addend("complexity_h1", rad_factor * r_h1.value, "complexity", "formula"),
        Addend("complexity_h0", rad_factor * r_h0.value, "complexity", "formula"),
        Addend("complexity_nu", 2.0 * r_nu.value, "complexity", "formula"),
        Addend("tail", tail, "tail", "formula"),
    ]
    constants = {
        "n": counts.n, "n_t1": counts.n_t1, "n_t0": counts.n_t0,
        "p_hat_t1": p1, "p_hat_t0": p0, "m": m, "w_max": w_max,
        "weight_range_constant": cw,
        "arm_balance_factor": arm_balance_factor(counts.n_t1, counts.n_t0),
        "c_loss": c_loss, "delta_conf": delta_conf, **clip_meta,
    }
    flags = {
        "oracle_mode": False,
        "vacuous_positivity": pos_violated
        or not (math.isfinite(d1.value) and math.isfinite(d0.value)),
    }
    notes = [
        "arm probabilities estimated from the certification split",
        "weight normalization frozen on the training arm sample means",
    ]
    if is_x:
        notes.append(
            "blend uses the fitted propensity estimate both in stage-two "
            "fitting and in the certified loss terms"
        )
    return _finish(
        task, "pac", scale, scale_name, addends,
        {"lam1": {"value": lam1, "source": s1},
         "lam0": {"value": lam0, "source": s0}},
        {"delta_t1": d1, "delta_t0": d0},
        {"var_cap": VarianceCap("popoviciu", m * m / 4.0)},
        {"r_h1": r_h1, "r_h0": r_h0, "r_nu": r_nu},
        constants, flags, notes,
    )


def _raw_stage2_losses(model, ds, loss, arm):
    # pseudo-effect residual losses of the X-learner second stage (unscaled)
    mask = ds.arm_mask(arm)
    X, y = ds.X[mask], ds.y[mask]
    if arm == 1:
        pseudo = y - np.asarray(model.h0.predict(X), dtype=float)
        fitted = np.asarray(model.tau1.predict(X), dtype=float)
    else:
        pseudo = np.asarray(model.h1.predict(X), dtype=float) - y
        fitted = np.asarray(model.tau0.predict(X), dtype=float)
    return loss.psi(pseudo - fitted)


def xlearner_observable_terms(model, ds, frozen, w1, w0):
    """The four weighted, blend-scaled observable stage losses."""
    e_of = lambda X: model.blend_values(X)
    ebar_of = lambda X: 1.0 - model.blend_values(X)
    l_e, l_ebar = frozen.scaled(e_of), frozen.scaled(ebar_of)

    m1, m0 = ds.arm_mask(1), ds.arm_mask(0)
    X1, y1 = ds.X[m1], ds.y[m1]
    X0, y0 = ds.X[m0], ds.y[m0]
    wv1, wv0 = w1(X1), w0(X0)

    h1_pred = model.predict_outcome(X1, 1)
    h0_pred = model.predict_outcome(X0, 0)
    obs_h1 = float(np.mean(wv1 * l_ebar.eval(X1, y1, h1_pred)))
    obs_h0 = float(np.mean(wv0 * l_e.eval(X0, y0, h0_pred)))

    pseudo1 = y1 - np.asarray(model.h0.predict(X1), dtype=float)
    tau1_pred = np.asarray(model.tau1.predict(X1), dtype=float)
    obs_tau1 = float(np.mean(wv1 * l_e.eval(X1, pseudo1, tau1_pred)))

    pseudo0 = np.asarray(model.h1.predict(X0), dtype=float) - y0
    tau0_pred = np.asarray(model.tau0.predict(X0), dtype=float)
    obs_tau0 = float(np.mean(wv0 * l_ebar.eval(X0, pseudo0, tau0_pred)))
    return obs_h1, obs_h0, obs_tau1, obs_tau0
