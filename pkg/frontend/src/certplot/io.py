"""Reading of experiment result CSVs.

The files embed their resolved configuration as leading ``#`` comment
lines, followed by one header row and typed data rows. This module only
reads the documented column contract; it never recomputes any bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass


class PlotInputError(ValueError):
    pass


REQUIRED_COLUMNS = {
    "tightness": (
        "experiment", "n", "replicate", "status", "observed_loss",
        "complete_loss", "theoretic_bound", "empirical_bound", "pac_bound",
    ),
    "sweep": ("experiment", "lam", "envelope", "upper_bound",
              "is_lambda_star", "status"),
    "selection": ("experiment", "model", "status", "observed_loss",
                  "certificate_bound"),
}

EXPERIMENT_NAMES = {
    "tightness": "tightness_vs_n",
    "sweep": "lambda_sweep",
    "selection": "model_selection",
}


@dataclass(frozen=True)
class ResultTable:
    header_comments: tuple
    columns: tuple
    rows: tuple  # tuple of dicts with parsed cells


def _parse_cell(raw: str):
    if raw == "":
        return None
    if raw == "true":
        return True
    if raw == "false":
        return False
    try:
        return float(raw)
    except ValueError:
        return raw


def read_result_csv(path) -> ResultTable:
    comments, rows = [], []
    with open(path, newline="") as fh:
        data_lines = []
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            else:
                data_lines.append(line)
    reader = csv.reader(data_lines)
    try:
        columns = next(reader)
    except StopIteration:
        raise PlotInputError(f"{path}: no header row")
    for cells in reader:
        if not cells:
            continue
        rows.append({c: _parse_cell(v) for c, v in zip(columns, cells)})
    return ResultTable(tuple(comments), tuple(columns), tuple(rows))


def check_contract(table: ResultTable, kind: str, path) -> None:
    """Validate the figure kind against the table's columns and rows."""
    if kind not in REQUIRED_COLUMNS:
        raise PlotInputError(f"unknown figure kind {kind!r}")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in table.columns]
    if missing:
        raise PlotInputError(
            f"{path}: missing columns for kind {kind!r}: {', '.join(missing)}"
        )
    expected = EXPERIMENT_NAMES[kind]
    seen = {r.get("experiment") for r in table.rows if r.get("experiment")}
    if seen and seen != {expected}:
        raise PlotInputError(
            f"{path}: experiment column says {sorted(seen)}, "
            f"but kind {kind!r} expects {expected!r}"
        )
    if not table.rows:
        raise PlotInputError(f"{path}: no data rows")


def is_vacuous(row: dict) -> bool:
    status = row.get("status")
    return isinstance(status, str) and status != "ok"


def finite_or_none(value):
    if value is None or isinstance(value, str):
        return None
    if isinstance(value, bool):
        return None
    return value if math.isfinite(value) else None
