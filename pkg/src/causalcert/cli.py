"""Command-line driver.

Verbs:
    generate    draw a synthetic dataset and write it as CSV
    certify     fit one model on a dataset and emit a certificate JSON
    experiment  run a configured experiment and write result files

Exit codes: 0 success, 2 config error, 3 data error, 4 partial failure
(some replicates or candidates failed).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import (
    delta_empirical,
    delta_theoretic,
    freeze_clip,
    observable_outcome_loss,
    outcome_bound_expectation,
    pac_meta_certificate,
    pac_outcome_certificate,
    popoviciu_cap,
    tlearner_bound_expectation,
    xlearner_bound_expectation,
    xlearner_observable_terms,
)
from .data import ColumnSchema, DataError, export_csv, ingest_csv, split
from .dgp import generate, parse_dgp
from .experiments import (
    ConfigError,
    build_config,
    load_config,
    parse_config_text,
    run_experiment,
)
from .learners import fit_classifier, fit_weighted_regressor
from .losses import parse_loss
from .metalearners import SLearner, XLearner, fit_metalearner
from .weights import parse_weight


def _add_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dgp", help="synthetic source, e.g. near_rct:n=2000,d=10,seed=1")
    p.add_argument("--data", help="CSV source path")
    p.add_argument("--covariates", help="comma-separated covariate columns")
    p.add_argument("--treatment", default="t")
    p.add_argument("--outcome", default="y")
    p.add_argument("--y1")
    p.add_argument("--y0")
    p.add_argument("--propensity")


def _load_dataset(args):
    if args.dgp:
        return generate(parse_dgp(args.dgp))
    if not args.data:
        raise ConfigError("either --dgp or --data is required")
    if not args.covariates:
        raise ConfigError("--data needs --covariates")
    schema = ColumnSchema(
        covariates=[c.strip() for c in args.covariates.split(",")],
        treatment=args.treatment,
        outcome=args.outcome,
        y1=args.y1,
        y0=args.y0,
        propensity=args.propensity,
    )
    return ingest_csv(args.data, schema)


def _cmd_generate(args) -> int:
    ds = generate(parse_dgp(args.dgp))
    export_csv(ds, args.out)
    print(f"wrote {ds.n} rows (d={ds.d}, oracle columns included) to {args.out}")
    return 0


def _cmd_certify(args) -> int:
    ds = _load_dataset(args)
    train, cert = split(ds, args.train_fraction, args.seed)
    loss = parse_loss(args.loss)
    lam = None if args.lam == "optimal" else float(args.lam)

    if args.regressor:
        arm = args.arm
        w = parse_weight(args.weight, train, arm=arm)
        mask = train.arm_mask(arm)
        model = fit_weighted_regressor(
            args.regressor, train.X[mask], train.y[mask], w(train.X[mask]), loss
        )
        nu = fit_classifier(args.nu, train.X, train.t.astype(float))
        if args.bound == "pac":
            certificate = pac_outcome_certificate(
                model, train, cert, loss, w, nu, arm=arm,
                delta_conf=args.delta, lam=lam,
                clip_percentile=args.clip_percentile,
            )
        else:
            raw = loss.psi(
                train.y[mask] - np.asarray(model.predict(train.X[mask]))
            )
            frozen, _ = freeze_clip(loss, [raw], args.clip_percentile)
            obs = observable_outcome_loss(
                lambda X: model.predict(X), cert, frozen, w, arm
            )
            if ds.has_oracle and args.oracle_delta:
                delta = delta_theoretic(cert, w, arm)
            else:
                delta = delta_empirical(cert, w, nu, arm)
            certificate = outcome_bound_expectation(
                obs, delta, popoviciu_cap(frozen.clip_m), lam
            )
    elif args.model:
        w1 = parse_weight(args.weight, train, arm=1)
        w0 = parse_weight(args.weight0 or args.weight, train, arm=0)
        model = fit_metalearner(args.model, train, w1, w0, loss)
        nu = fit_classifier(args.nu, train.X, train.t.astype(float))
        if args.bound == "pac":
            certificate = pac_meta_certificate(
                model, train, cert, loss, w1, w0, nu,
                delta_conf=args.delta, lam1=lam, lam0=lam,
                clip_percentile=args.clip_percentile,
            )
        else:
            raw1 = loss.psi(
                train.y[train.arm_mask(1)]
                - model.predict_outcome(train.X[train.arm_mask(1)], 1)
            )
            raw0 = loss.psi(
                train.y[train.arm_mask(0)]
                - model.predict_outcome(train.X[train.arm_mask(0)], 0)
            )
            frozen, _ = freeze_clip(loss, [raw1, raw0], args.clip_percentile)
            cap = popoviciu_cap(frozen.clip_m)
            d1 = delta_empirical(cert, w1, nu, 1)
            d0 = delta_empirical(cert, w0, nu, 0)
            obs1 = observable_outcome_loss(
                lambda X: model.predict_outcome(X, 1), cert, frozen, w1, 1
            )
            obs0 = observable_outcome_loss(
                lambda X: model.predict_outcome(X, 0), cert, frozen, w0, 0
            )
            c_loss = frozen.subadditivity_constant()
            if isinstance(model, XLearner):
                oh1, oh0, ot1, ot0 = xlearner_observable_terms(
                    model, cert, frozen, w1, w0
                )
                certificate = xlearner_bound_expectation(
                    oh1, oh0, ot1, ot0, d1, d0, cap, cap, cap, cap, c_loss,
                    lam1=lam, lam0=lam, lam10=lam, lam01=lam,
                )
            else:
                task = "s_learner" if isinstance(model, SLearner) else "t_learner"
                certificate = tlearner_bound_expectation(
                    obs1, obs0, d1, d0, cap, cap, c_loss,
                    lam1=lam, lam0=lam, task=task,
                )
    else:
        raise ConfigError("one of --regressor or --model is required")

    doc = certificate.to_dict()
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    status = "vacuous (positivity violated)" if certificate.is_vacuous else "ok"
    print(f"task={certificate.task} bound_kind={certificate.bound_kind} "
          f"upper_bound={certificate.upper_bound:.17g} status={status}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    overrides = dict(item.split("=", 1) for item in args.set or [])
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.delta is not None:
        overrides["delta"] = str(args.delta)
    if args.lam is not None:
        overrides["lambda"] = (
            args.lam if args.lam == "optimal" else f"fixed:{args.lam}"
        )
    if args.out is not None:
        overrides["out"] = args.out
    if overrides:
        raw = dict(cfg.resolved_items())
        for entry in cfg.models:  # keep model entries through the rebuild
            raw[f"model.{entry.name}.spec"] = entry.spec
            raw[f"model.{entry.name}.weight1"] = entry.weight1
            raw[f"model.{entry.name}.weight0"] = entry.weight0
            if entry.nu:
                raw[f"model.{entry.name}.nu"] = entry.nu
        raw.update(overrides)
        cfg = build_config(raw)
    result = run_experiment(cfg)
    print(f"wrote {result.csv_path} and {result.json_path} "
          f"({len(result.rows)} rows, {result.n_failed} failed)")
    return 4 if result.n_failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcert",
        description="certified upper bounds on counterfactual losses",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="draw a synthetic dataset to CSV")
    p_gen.add_argument("--dgp", required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_generate)

    p_cert = sub.add_parser("certify", help="fit and certify one model")
    _add_source_args(p_cert)
    p_cert.add_argument("--regressor", help="outcome task base learner spec")
    p_cert.add_argument("--arm", type=int, default=1, choices=(0, 1))
    p_cert.add_argument("--model", help="meta-learner spec (t:/s:/x:)")
    p_cert.add_argument("--loss", default="squared")
    p_cert.add_argument("--weight", default="one")
    p_cert.add_argument("--weight0", help="control-arm weight spec override")
    p_cert.add_argument("--nu", default="logistic:l2=1.0")
    p_cert.add_argument("--bound", choices=("expectation", "pac"), default="pac")
    p_cert.add_argument("--delta", type=float, default=0.05)
    p_cert.add_argument("--lambda", dest="lam", default="optimal")
    p_cert.add_argument("--train-fraction", type=float, default=0.5)
    p_cert.add_argument("--clip-percentile", type=float, default=99.5)
    p_cert.add_argument("--oracle-delta", action="store_true",
                        help="use oracle propensities for the divergence")
    p_cert.add_argument("--seed", type=int, default=0)
    p_cert.add_argument("--out", help="certificate JSON path")
    p_cert.set_defaults(func=_cmd_certify)

    p_exp = sub.add_parser("experiment", help="run a configured experiment")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_exp.add_argument("--seed", type=int)
    p_exp.add_argument("--delta", type=float)
    p_exp.add_argument("--lambda", dest="lam")
    p_exp.add_argument("--out")
    p_exp.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
