"""Script entry point: ``condcontrol-plot KIND inputs.csv... --out figure.png``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, PlotDataError, PlotJob, render


def _build_parser() -> argparse.ArgumentParser:
    kinds = ", ".join(f"{k} ({v[1]})" for k, v in sorted(FIGURE_KINDS.items()))
    parser = argparse.ArgumentParser(
        prog="condcontrol-plot",
        description="Render a figure from solver CSV artifacts.",
        epilog=f"inputs per kind: {kinds}",
    )
    parser.add_argument("kind", choices=sorted(FIGURE_KINDS), help="figure kind")
    parser.add_argument("csvs", nargs="+", type=Path, help="input CSV file(s)")
    parser.add_argument("--out", type=Path, required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        path = render(PlotJob(args.kind, tuple(args.csvs), args.out))
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
