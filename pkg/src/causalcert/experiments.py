"""Experiment runners: fit models, certify them, and write result files.

Three experiment kinds are supported:

* ``tightness_vs_n`` -- for a grid of sample sizes and seeded replicates,
  record the observable loss, the oracle complete loss and three
  certificates (oracle-divergence, empirical-divergence, finite-sample).
* ``lambda_sweep`` -- evaluate the envelope of one certificate over a grid
  of tuning values, marking the optimum and the untuned value 1.
* ``model_selection`` -- certify a list of candidate models, bootstrap
  confidence intervals for their observable losses, and report whether
  the certified ordering differs from the observable one.

Each run writes one CSV (with the resolved configuration embedded as
leading comment lines, so reruns are byte-identical) and one JSON sidecar
carrying the full certificate documents. Output files are written
atomically.

Config files are flat ``key = value`` lines; ``#`` starts a comment.
Recognized keys:

    experiment                tightness_vs_n | lambda_sweep | model_selection
    dgp                       generator spec, e.g. near_rct:n=2000,d=10,seed=1
    csv / covariates / treatment / outcome / y1 / y0 / propensity
                              CSV source and column mapping (alternative to dgp)
    regressor                 base learner for outcome tasks (tightness, sweep)
    arm                       outcome arm to certify (default 1)
    loss                      squared | absolute | quantile:a | zero_one
    weight                    one | ipw:clf=<spec>,clip=e   (outcome tasks)
    nu                        classifier spec for the divergence bound
    delta                     confidence level of finite-sample certificates
    lambda                    optimal | fixed:<v>
    var_cap                   popoviciu | assert:<v>
    clip_percentile           range-cap percentile (default 99.5)
    train_fraction            split fraction (default 0.5)
    n_grid                    comma-separated sizes (tightness)
    replicates                replicates per size (tightness)
    sweep_grid                lo:hi:points log grid (lambda_sweep)
    bootstrap / ci_level      bootstrap reps and CI level (model_selection)
    model.<id>.spec           meta-learner spec of one candidate
    model.<id>.weight1/.weight0/.nu
                              per-candidate overrides (default one/one/global)
    seed / out                base seed and output directory
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    asserted_cap,
    delta_empirical,
    delta_theoretic,
    freeze_clip,
    observable_outcome_loss,
    outcome_bound_expectation,
    pac_outcome_certificate,
    popoviciu_cap,
    tlearner_bound_expectation,
    xlearner_bound_expectation,
    xlearner_observable_terms,
)
from .data import CausalDataset, ColumnSchema, DataError, ingest_csv, split
from .dgp import complete_loss, generate, parse_dgp
from .learners import fit_classifier, fit_weighted_regressor
from .losses import parse_loss
from .measure import envelope_value, optimal_lambda
from .metalearners import SLearner, XLearner, fit_metalearner
from .weights import parse_weight

FLOAT_FORMAT = "%.17g"


class ConfigError(ValueError):
    pass


@dataclass
class ModelEntry:
    name: str
    spec: str
    weight1: str = "one"
    weight0: str = "one"
    nu: str | None = None


@dataclass
class ExperimentConfig:
    experiment: str
    dgp: str | None = None
    csv: str | None = None
    covariates: str | None = None
    treatment: str = "t"
    outcome: str = "y"
    y1: str | None = None
    y0: str | None = None
    propensity: str | None = None
    regressor: str = "ridge:l2=1.0"
    arm: int = 1
    loss: str = "squared"
    weight: str = "one"
    nu: str = "logistic:l2=1.0"
    delta: float = 0.05
    lambda_policy: str = "optimal"
    var_cap: str = "popoviciu"
    clip_percentile: float = 99.5
    train_fraction: float = 0.5
    n_grid: tuple = (500, 1000, 2000)
    replicates: int = 5
    sweep_grid: str = "1e-3:1e3:41"
    bootstrap: int = 1000
    ci_level: float = 0.95
    seed: int = 0
    out: str = "results"
    models: list = field(default_factory=list)

    def resolved_items(self) -> list[tuple[str, str]]:
        items = []
        for f in dataclasses.fields(self):
            if f.name == "models":
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "n_grid":
                v = ",".join(str(x) for x in v)
            if f.name == "lambda_policy":
                items.append(("lambda", str(v)))
                continue
            items.append((f.name, str(v)))
        for m in self.models:
            items.append((f"model.{m.name}.spec", m.spec))
            items.append((f"model.{m.name}.weight1", m.weight1))
            items.append((f"model.{m.name}.weight0", m.weight0))
            if m.nu:
                items.append((f"model.{m.name}.nu", m.nu))
        return sorted(items)


EXPERIMENTS = ("tightness_vs_n", "lambda_sweep", "model_selection")


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines into a dict of raw strings."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def build_config(raw: dict) -> ExperimentConfig:
    """Validate raw key/value pairs into an ExperimentConfig."""
    raw = dict(raw)
    experiment = raw.pop("experiment", None)
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {EXPERIMENTS}, got {experiment!r}"
        )
    cfg = ExperimentConfig(experiment=experiment)

    models: dict[str, ModelEntry] = {}
    simple_str = {
        "dgp", "csv", "covariates", "treatment", "outcome", "y1", "y0",
        "propensity", "regressor", "loss", "weight", "nu", "var_cap",
        "sweep_grid", "out",
    }
    try:
        for key, value in raw.items():
            if key.startswith("model."):
                parts = key.split(".")
                if len(parts) != 3 or parts[2] not in (
                    "spec", "weight1", "weight0", "nu"
                ):
                    raise ConfigError(f"bad model key {key!r}")
                entry = models.setdefault(parts[1], ModelEntry(parts[1], ""))
                setattr(entry, parts[2], value)
            elif key in simple_str:
                setattr(cfg, key, value)
            elif key == "lambda":
                if value != "optimal" and not value.startswith("fixed:"):
                    raise ConfigError("lambda must be 'optimal' or 'fixed:<v>'")
                if value.startswith("fixed:"):
                    float(value.split(":", 1)[1])
                cfg.lambda_policy = value
            elif key == "arm":
                cfg.arm = int(value)
                if cfg.arm not in (0, 1):
                    raise ConfigError("arm must be 0 or 1")
            elif key in ("delta", "clip_percentile", "train_fraction", "ci_level"):
                setattr(cfg, key, float(value))
            elif key in ("replicates", "bootstrap", "seed"):
                setattr(cfg, key, int(value))
            elif key == "n_grid":
                cfg.n_grid = tuple(int(x) for x in value.split(","))
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc

    if not 0.0 < cfg.delta < 1.0:
        raise ConfigError("delta must lie in (0, 1)")
    if not 0.0 < cfg.train_fraction < 1.0:
        raise ConfigError("train_fraction must lie in (0, 1)")
    for name, entry in models.items():
        if not entry.spec:
            raise ConfigError(f"model.{name}.spec is missing")
    cfg.models = [models[k] for k in sorted(models)]
    if cfg.experiment == "model_selection" and not cfg.models:
        raise ConfigError("model_selection needs at least one model.<id>.spec")
    if cfg.experiment in ("tightness_vs_n", "lambda_sweep") and cfg.dgp is None:
        raise ConfigError(f"{cfg.experiment} needs an oracle dgp source")
    if cfg.dgp is None and cfg.csv is None:
        raise ConfigError("either a dgp or a csv source is required")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return build_config(parse_config_text(fh.read()))


# -- shared helpers ------------------------------------------------------------


def _child_seeds(parts, count: int) -> list[int]:
    ss = np.random.SeedSequence([int(p) for p in parts])
    return [int(x) for x in ss.generate_state(count)]


def _lambda_from_policy(policy: str) -> float | None:
    if policy == "optimal":
        return None
    return float(policy.split(":", 1)[1])


def _var_cap(cfg: ExperimentConfig, m: float):
    if cfg.var_cap == "popoviciu":
        return popoviciu_cap(m)
    if cfg.var_cap.startswith("assert:"):
        return asserted_cap(float(cfg.var_cap.split(":", 1)[1]))
    raise ConfigError("var_cap must be 'popoviciu' or 'assert:<v>'")


def _load_source(cfg: ExperimentConfig) -> CausalDataset:
    if cfg.dgp is not None:
        return generate(parse_dgp(cfg.dgp))
    if cfg.covariates is None:
        raise ConfigError("csv source needs a 'covariates' column list")
    schema = ColumnSchema(
        covariates=[c.strip() for c in cfg.covariates.split(",")],
        treatment=cfg.treatment,
        outcome=cfg.outcome,
        y1=cfg.y1,
        y0=cfg.y0,
        propensity=cfg.propensity,
    )
    return ingest_csv(cfg.csv, schema)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, cfg: ExperimentConfig, columns, rows) -> None:
    lines = [f"# {k} = {v}" for k, v in cfg.resolved_items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _outcome_predict(model, loss):
    def predict(X):
        out = np.asarray(model.predict(X), dtype=float)
        return (out >= 0.5).astype(float) if loss.kind == "zero_one" else out

    return predict


@dataclass
class ExperimentResult:
    csv_path: str
    json_path: str
    rows: list
    sidecar: dict
    n_failed: int = 0


# -- tightness_vs_n ------------------------------------------------------------

TIGHTNESS_COLUMNS = (
    "experiment", "n", "replicate", "status", "observed_loss", "complete_loss",
    "theoretic_bound", "empirical_bound", "pac_bound", "delta_theoretic",
    "delta_empirical", "lambda_theoretic", "lambda_empirical", "clip_m",
)


def _tightness_replicate(cfg: ExperimentConfig, n: int, rep: int) -> tuple[dict, dict]:
    dgp_seed, split_seed = _child_seeds([cfg.seed, n, rep], 2)
    spec = dataclasses.replace(parse_dgp(cfg.dgp), n=n, seed=dgp_seed)
    ds = generate(spec)
    train, cert = split(ds, cfg.train_fraction, split_seed)

    loss = parse_loss(cfg.loss)
    arm = cfg.arm
    w = parse_weight(cfg.weight, train, arm=arm)
    mask = train.arm_mask(arm)
    model = fit_weighted_regressor(
        cfg.regressor, train.X[mask], train.y[mask], w(train.X[mask]), loss
    )
    nu = fit_classifier(cfg.nu, train.X, train.t.astype(float))

    predict = _outcome_predict(model, loss)
    raw = loss.psi(train.y[mask] - predict(train.X[mask]))
    frozen, clip_meta = freeze_clip(loss, [raw], cfg.clip_percentile)
    cap = _var_cap(cfg, frozen.clip_m)
    lam = _lambda_from_policy(cfg.lambda_policy)

    obs = observable_outcome_loss(predict, cert, frozen, w, arm)
    d_theo = delta_theoretic(cert, w, arm)
    d_emp = delta_empirical(cert, w, nu, arm)
    cert_theo = outcome_bound_expectation(obs, d_theo, cap, lam)
    cert_emp = outcome_bound_expectation(obs, d_emp, cap, lam)
    cert_pac = pac_outcome_certificate(
        model, train, cert, loss, w, nu, arm=arm, delta_conf=cfg.delta,
        lam=lam, clip_percentile=cfg.clip_percentile,
    )
    complete = complete_loss(predict, cert, frozen, "outcome", arm)

    vacuous = cert_theo.is_vacuous or cert_emp.is_vacuous or cert_pac.is_vacuous
    row = {
        "experiment": cfg.experiment,
        "n": n,
        "replicate": rep,
        "status": "vacuous" if vacuous else "ok",
        "observed_loss": obs,
        "complete_loss": complete,
        "theoretic_bound": cert_theo.upper_bound,
        "empirical_bound": cert_emp.upper_bound,
        "pac_bound": cert_pac.upper_bound,
        "delta_theoretic": d_theo.value,
        "delta_empirical": d_emp.value,
        "lambda_theoretic": cert_theo.lambdas["lam"]["value"],
        "lambda_empirical": cert_emp.lambdas["lam"]["value"],
        "clip_m": frozen.clip_m,
    }
    docs = {
        "theoretic": cert_theo.to_dict(),
        "empirical": cert_emp.to_dict(),
        "pac": cert_pac.to_dict(),
        "seeds": {"dgp": dgp_seed, "split": split_seed},
    }
    return row, docs


def run_tightness_vs_n(cfg: ExperimentConfig, out_dir: str) -> ExperimentResult:
    os.makedirs(out_dir, exist_ok=True)
    rows, certs, n_failed = [], {}, 0
    for n in sorted(cfg.n_grid):
        for rep in range(cfg.replicates):
            try:
                row, docs = _tightness_replicate(cfg, n, rep)
                certs[f"n={n},replicate={rep}"] = docs
            except (DataError, ValueError) as exc:
                n_failed += 1
                row = {c: "" for c in TIGHTNESS_COLUMNS}
                row.update(
                    experiment=cfg.experiment, n=n, replicate=rep,
                    status=f"failed:{type(exc).__name__}",
                )
            rows.append(row)
    csv_path = os.path.join(out_dir, "tightness_vs_n.csv")
    json_path = os.path.join(out_dir, "tightness_vs_n.json")
    sidecar = {
        "config": dict(cfg.resolved_items()),
        "certificates": certs,
        "n_failed": n_failed,
    }
    _write_csv(csv_path, cfg, TIGHTNESS_COLUMNS, rows)
    _write_json(json_path, sidecar)
    return ExperimentResult(csv_path, json_path, rows, sidecar, n_failed)


# -- lambda_sweep ----------------------------------------------------------------

SWEEP_COLUMNS = (
    "experiment", "lam", "envelope", "upper_bound", "is_lambda_star", "status",
)


def run_lambda_sweep(cfg: ExperimentConfig, out_dir: str) -> ExperimentResult:
    os.makedirs(out_dir, exist_ok=True)
    dgp_seed, split_seed = _child_seeds([cfg.seed, 1], 2)
    spec = parse_dgp(cfg.dgp)
    spec = dataclasses.replace(spec, seed=dgp_seed)
    ds = generate(spec)
    train, cert = split(ds, cfg.train_fraction, split_seed)

    loss = parse_loss(cfg.loss)
    arm = cfg.arm
    w = parse_weight(cfg.weight, train, arm=arm)
    mask = train.arm_mask(arm)
    model = fit_weighted_regressor(
        cfg.regressor, train.X[mask], train.y[mask], w(train.X[mask]), loss
    )
    predict = _outcome_predict(model, loss)
    raw = loss.psi(train.y[mask] - predict(train.X[mask]))
    frozen, _ = freeze_clip(loss, [raw], cfg.clip_percentile)
    cap = _var_cap(cfg, frozen.clip_m)
    obs = observable_outcome_loss(predict, cert, frozen, w, arm)
    if ds.has_oracle:
        delta = delta_theoretic(cert, w, arm)
    else:
        nu = fit_classifier(cfg.nu, train.X, train.t.astype(float))
        delta = delta_empirical(cert, w, nu, arm)

    try:
        lo_s, hi_s, pts_s = cfg.sweep_grid.split(":")
        lo, hi, pts = float(lo_s), float(hi_s), int(pts_s)
        if not (0.0 < lo < hi and pts >= 2):
            raise ValueError
    except ValueError:
        raise ConfigError("sweep_grid must be 'lo:hi:points' with 0 < lo < hi")
    grid = list(np.geomspace(lo, hi, pts))
    if not any(g == 1.0 for g in grid):
        grid.append(1.0)
    lam_star = optimal_lambda(delta.value, cap.value)
    if math.isfinite(lam_star) and lam_star > 0.0:
        grid.append(lam_star)
    grid = sorted(set(grid))

    rows = []
    for lam in grid:
        env = envelope_value(delta.value, cap.value, lam)
        rows.append({
            "experiment": cfg.experiment,
            "lam": lam,
            "envelope": env,
            "upper_bound": obs + env,
            "is_lambda_star": lam == lam_star,
            "status": "ok" if math.isfinite(env) else "vacuous",
        })
    env_one = envelope_value(delta.value, cap.value, 1.0)
    env_star = envelope_value(delta.value, cap.value, lam_star)
    ratio = env_one / env_star if env_star > 0.0 else math.inf
    sidecar = {
        "config": dict(cfg.resolved_items()),
        "seeds": {"dgp": dgp_seed, "split": split_seed},
        "summary": {
            "observed_loss": obs,
            "delta": delta.to_dict(),
            "var_cap": cap.to_dict(),
            "lambda_star": lam_star,
            "envelope_at_one": env_one,
            "envelope_at_star": env_star,
            "tightening_ratio": ratio,
            "exact_rct": delta.value == 0.0,
        },
    }
    csv_path = os.path.join(out_dir, "lambda_sweep.csv")
    json_path = os.path.join(out_dir, "lambda_sweep.json")
    _write_csv(csv_path, cfg, SWEEP_COLUMNS, rows)
    _write_json(json_path, sidecar)
    return ExperimentResult(csv_path, json_path, rows, sidecar, 0)


# -- model_selection -------------------------------------------------------------


def _selection_columns(with_ci: bool) -> tuple:
    cols = ["experiment", "model", "status", "observed_loss"]
    if with_ci:
        cols += ["ci_lower", "ci_upper"]
    cols += [
        "certificate_bound", "delta_empirical_t1", "delta_empirical_t0",
        "rank_observed", "rank_bound",
    ]
    return tuple(cols)


def _certify_candidate(cfg: ExperimentConfig, entry: ModelEntry,
                       train: CausalDataset, cert: CausalDataset, index: int):
    loss = parse_loss(cfg.loss)
    w1 = parse_weight(entry.weight1, train, arm=1)
    w0 = parse_weight(entry.weight0, train, arm=0)
    model = fit_metalearner(entry.spec, train, w1, w0, loss)
    nu = fit_classifier(entry.nu or cfg.nu, train.X, train.t.astype(float))

    raw1 = loss.psi(
        train.y[train.arm_mask(1)]
        - model.predict_outcome(train.X[train.arm_mask(1)], 1)
    )
    raw0 = loss.psi(
        train.y[train.arm_mask(0)]
        - model.predict_outcome(train.X[train.arm_mask(0)], 0)
    )
    frozen, _ = freeze_clip(loss, [raw1, raw0], cfg.clip_percentile)
    cap = _var_cap(cfg, frozen.clip_m)
    lam = _lambda_from_policy(cfg.lambda_policy)

    m1, m0 = cert.arm_mask(1), cert.arm_mask(0)
    per1 = w1(cert.X[m1]) * frozen.eval(
        cert.y[m1], model.predict_outcome(cert.X[m1], 1)
    )
    per0 = w0(cert.X[m0]) * frozen.eval(
        cert.y[m0], model.predict_outcome(cert.X[m0], 0)
    )
    obs1, obs0 = float(np.mean(per1)), float(np.mean(per0))
    d1 = delta_empirical(cert, w1, nu, 1)
    d0 = delta_empirical(cert, w0, nu, 0)
    c_loss = frozen.subadditivity_constant()
    if isinstance(model, XLearner):
        obs_h1, obs_h0, obs_t1, obs_t0 = xlearner_observable_terms(
            model, cert, frozen, w1, w0
        )
        certificate = xlearner_bound_expectation(
            obs_h1, obs_h0, obs_t1, obs_t0, d1, d0, cap, cap, cap, cap,
            c_loss, lam1=lam, lam0=lam, lam10=lam, lam01=lam,
        )
    else:
        task = "s_learner" if isinstance(model, SLearner) else "t_learner"
        certificate = tlearner_bound_expectation(
            obs1, obs0, d1, d0, cap, cap, c_loss, lam1=lam, lam0=lam,
            task=task,
        )

    ci = None
    if cfg.bootstrap > 0:
        rng = np.random.default_rng(_child_seeds([cfg.seed, 2, index], 1)[0])
        reps = np.empty(cfg.bootstrap)
        for b in range(cfg.bootstrap):
            i1 = rng.integers(0, per1.size, per1.size)
            i0 = rng.integers(0, per0.size, per0.size)
            reps[b] = per1[i1].mean() + per0[i0].mean()
        tail_prob = 100.0 * (1.0 - cfg.ci_level) / 2.0
        ci = (
            float(np.percentile(reps, tail_prob)),
            float(np.percentile(reps, 100.0 - tail_prob)),
        )
    return {
        "observed_loss": obs1 + obs0,
        "certificate": certificate,
        "d1": d1,
        "d0": d0,
        "ci": ci,
    }


def run_model_selection(cfg: ExperimentConfig, out_dir: str) -> ExperimentResult:
    os.makedirs(out_dir, exist_ok=True)
    dgp_seed, split_seed = _child_seeds([cfg.seed, 0], 2)
    if cfg.dgp is not None:
        spec = dataclasses.replace(parse_dgp(cfg.dgp), seed=dgp_seed)
        ds = generate(spec)
    else:
        ds = _load_source(cfg)
    train, cert = split(ds, cfg.train_fraction, split_seed)

    results, rows, n_failed = {}, [], 0
    with_ci = cfg.bootstrap > 0
    columns = _selection_columns(with_ci)
    for index, entry in enumerate(cfg.models):
        try:
            results[entry.name] = _certify_candidate(cfg, entry, train, cert, index)
        except (DataError, ValueError) as exc:
            n_failed += 1
            results[entry.name] = {"error": f"failed:{type(exc).__name__}"}

    ok_names = [n for n in results if "error" not in results[n]]
    obs_rank = {
        n: r + 1 for r, n in enumerate(
            sorted(ok_names, key=lambda n: results[n]["observed_loss"])
        )
    }
    bound_rank = {
        n: r + 1 for r, n in enumerate(
            sorted(ok_names, key=lambda n: results[n]["certificate"].upper_bound)
        )
    }
    for entry in cfg.models:
        res = results[entry.name]
        if "error" in res:
            row = {c: "" for c in columns}
            row.update(experiment=cfg.experiment, model=entry.name,
                       status=res["error"])
        else:
            certificate = res["certificate"]
            row = {
                "experiment": cfg.experiment,
                "model": entry.name,
                "status": "vacuous" if certificate.is_vacuous else "ok",
                "observed_loss": res["observed_loss"],
                "certificate_bound": certificate.upper_bound,
                "delta_empirical_t1": res["d1"].value,
                "delta_empirical_t0": res["d0"].value,
                "rank_observed": obs_rank[entry.name],
                "rank_bound": bound_rank[entry.name],
            }
            if with_ci:
                row["ci_lower"], row["ci_upper"] = res["ci"]
        rows.append(row)

    pairs = []
    for i, a in enumerate(ok_names):
        for b in ok_names[i + 1:]:
            obs_order = results[a]["observed_loss"] <= results[b]["observed_loss"]
            bound_order = (
                results[a]["certificate"].upper_bound
                <= results[b]["certificate"].upper_bound
            )
            pairs.append({
                "model_a": a,
                "model_b": b,
                "observed_prefers_a": obs_order,
                "bound_prefers_a": bound_order,
                "ordering_changed_by_correction": obs_order != bound_order,
            })

    sidecar = {
        "config": dict(cfg.resolved_items()),
        "seeds": {"dgp": dgp_seed, "split": split_seed},
        "bootstrap": {"reps": cfg.bootstrap, "ci_level": cfg.ci_level,
                      "method": "percentile, arm-stratified"},
        "certificates": {
            n: results[n]["certificate"].to_dict() for n in ok_names
        },
        "pairs": pairs,
        "n_failed": n_failed,
    }
    csv_path = os.path.join(out_dir, "model_selection.csv")
    json_path = os.path.join(out_dir, "model_selection.json")
    _write_csv(csv_path, cfg, columns, rows)
    _write_json(json_path, sidecar)
    return ExperimentResult(csv_path, json_path, rows, sidecar, n_failed)


RUNNERS = {
    "tightness_vs_n": run_tightness_vs_n,
    "lambda_sweep": run_lambda_sweep,
    "model_selection": run_model_selection,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None
                   ) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg, out_dir or cfg.out)
