"""Figure rendering for the three experiment result kinds.

Charts draw only what the CSV contract provides: no bound is recomputed
here. Rows whose status is not "ok" (vacuous or failed) are drawn as
annotated markers rather than silently dropped. Rendering is
deterministic: a fixed style, the Agg backend, a pinned SVG hash salt and
no date metadata, so identical inputs give identical image bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    PlotInputError,
    check_contract,
    finite_or_none,
    is_vacuous,
    read_result_csv,
)

matplotlib.rcParams["svg.hashsalt"] = "certplot"

FIGURE_KINDS = ("tightness", "sweep", "selection")

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9.0,
}

_SERIES = (
    ("pac_bound", "finite-sample bound", "#7a1fa2"),
    ("empirical_bound", "empirical bound", "#d62728"),
    ("theoretic_bound", "oracle bound", "#1f77b4"),
    ("observed_loss", "observed loss", "#2ca02c"),
)


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: input CSV, figure kind, output image path."""

    input_csv: str
    kind: str
    output: str
    logx: bool = False
    logy: bool = False
    title: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotInputError(f"unknown figure kind {self.kind!r}")


@dataclass
class RenderInfo:
    """What was drawn, for callers and tests."""

    kind: str
    output: str
    n_rows: int
    n_flagged: int
    marker_lambda: float | None = None
    models: tuple = ()


def _finalize(fig, ax, spec: PlotSpec) -> None:
    if spec.title:
        ax.set_title(spec.title)
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    ax.legend(loc="best")
    fig.tight_layout()
    metadata = None
    if spec.output.endswith(".svg"):
        metadata = {"Date": None}
    elif spec.output.endswith(".png"):
        metadata = {"Software": "certplot"}
    fig.savefig(spec.output, metadata=metadata)
    plt.close(fig)


def _annotate_flagged(ax, xs, labels) -> None:
    top = ax.get_ylim()[1]
    for x, label in zip(xs, labels):
        ax.plot([x], [top], marker="x", color="#b00020", markersize=8,
                clip_on=False)
        ax.annotate(label, (x, top), textcoords="offset points",
                    xytext=(0, 4), ha="center", fontsize=7, color="#b00020")


def _mean_by_key(rows, key_values, key, column):
    means = []
    for k in key_values:
        vals = [finite_or_none(r[column]) for r in rows if r[key] == k]
        vals = [v for v in vals if v is not None]
        means.append(float(np.mean(vals)) if vals else np.nan)
    return means


def _render_tightness(table, spec: PlotSpec) -> RenderInfo:
    ok = [r for r in table.rows if not is_vacuous(r)]
    flagged = [r for r in table.rows if is_vacuous(r)]
    ns = sorted({r["n"] for r in ok})
    fig, ax = plt.subplots()
    for column, label, color in _SERIES:
        ax.plot(ns, _mean_by_key(ok, ns, "n", column), marker="o",
                label=label, color=color)
    ax.plot(ns, _mean_by_key(ok, ns, "n", "complete_loss"), linestyle="--",
            color="black", label="complete loss (oracle)")
    ax.set_xlabel("training samples")
    ax.set_ylabel("loss")
    if flagged:
        _annotate_flagged(ax, [r["n"] for r in flagged],
                          [str(r["status"]) for r in flagged])
    _finalize(fig, ax, spec)
    return RenderInfo(spec.kind, spec.output, len(table.rows), len(flagged))


def _render_sweep(table, spec: PlotSpec) -> RenderInfo:
    ok = [r for r in table.rows if not is_vacuous(r)]
    flagged = [r for r in table.rows if is_vacuous(r)]
    fig, ax = plt.subplots()
    ax.plot([r["lam"] for r in ok], [r["upper_bound"] for r in ok],
            color="#2ca02c", label="upper bound")
    ax.plot([r["lam"] for r in ok], [r["envelope"] for r in ok],
            color="#1f77b4", label="envelope")
    ax.set_xscale("log")
    ax.set_yscale("log")
    marker_lambda = None
    star_rows = [r for r in table.rows if r["is_lambda_star"] is True]
    if star_rows:
        star = star_rows[0]
        marker_lambda = star["lam"]
        ax.axvline(marker_lambda, color="#d62728", linestyle=":",
                   label="optimal tuning")
        ax.plot([marker_lambda], [star["envelope"]], marker="v",
                color="#d62728")
    ax.set_xlabel("tuning value")
    ax.set_ylabel("envelope")
    if flagged:
        _annotate_flagged(ax, [r["lam"] for r in flagged],
                          [str(r["status"]) for r in flagged])
    _finalize(fig, ax, spec)
    return RenderInfo(spec.kind, spec.output, len(table.rows), len(flagged),
                      marker_lambda=marker_lambda)


def _render_selection(table, spec: PlotSpec) -> RenderInfo:
    rows = list(table.rows)
    models = [str(r["model"]) for r in rows]
    xs = np.arange(len(rows))
    fig, ax = plt.subplots()
    heights, flagged_x, flagged_labels = [], [], []
    for i, r in enumerate(rows):
        bound = finite_or_none(r.get("certificate_bound"))
        if is_vacuous(r) or bound is None:
            flagged_x.append(i)
            flagged_labels.append(str(r.get("status", "flagged")))
            heights.append(0.0)
        else:
            heights.append(bound)
    ax.bar(xs, heights, width=0.6, color="#9ecae1", edgecolor="#1f77b4",
           label="certified upper bound")
    obs = [finite_or_none(r.get("observed_loss")) for r in rows]
    obs_x = [float(x) for x, o in zip(xs, obs) if o is not None]
    obs_v = [o for o in obs if o is not None]
    if "ci_lower" in table.columns and "ci_upper" in table.columns:
        err_lo, err_hi = [], []
        for r, o in zip(rows, obs):
            if o is None:
                continue
            lo = finite_or_none(r["ci_lower"])
            hi = finite_or_none(r["ci_upper"])
            err_lo.append(0.0 if lo is None else max(0.0, o - lo))
            err_hi.append(0.0 if hi is None else max(0.0, hi - o))
        ax.errorbar(obs_x, obs_v, yerr=[err_lo, err_hi], fmt="o",
                    color="black", capsize=4, label="observed loss (CI)")
    else:
        ax.plot(obs_x, obs_v, "o", color="black", label="observed loss")
    ax.set_xticks(xs)
    ax.set_xticklabels(models, rotation=20, ha="right")
    ax.set_ylabel("loss")
    if flagged_x:
        _annotate_flagged(ax, flagged_x, flagged_labels)
    _finalize(fig, ax, spec)
    return RenderInfo(spec.kind, spec.output, len(rows), len(flagged_x),
                      models=tuple(models))


_RENDERERS = {
    "tightness": _render_tightness,
    "sweep": _render_sweep,
    "selection": _render_selection,
}


def render(spec: PlotSpec) -> RenderInfo:
    """Render one figure from a result CSV; returns what was drawn."""
    table = read_result_csv(spec.input_csv)
    check_contract(table, spec.kind, spec.input_csv)
    with matplotlib.rc_context(_STYLE):
        return _RENDERERS[spec.kind](table, spec)
