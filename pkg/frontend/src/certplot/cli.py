"""The ``plot`` command: render one figure from a result CSV.

Usage: certplot --kind <tightness|sweep|selection> --in results.csv
       --out figure.svg [--logx] [--logy] [--title TEXT]
"""

from __future__ import annotations

import argparse
import sys

from .io import PlotInputError
from .render import FIGURE_KINDS, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certplot", description="render experiment result CSVs as charts"
    )
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output", required=True,
                        help="image path (.png or .svg)")
    parser.add_argument("--logx", action="store_true")
    parser.add_argument("--logy", action="store_true")
    parser.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        input_csv=args.input_csv,
        kind=args.kind,
        output=args.output,
        logx=args.logx,
        logy=args.logy,
        title=args.title,
    )
    try:
        info = render(spec)
    except (PlotInputError, OSError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    flagged = f", {info.n_flagged} flagged" if info.n_flagged else ""
    print(f"wrote {info.output} ({info.n_rows} rows{flagged})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
