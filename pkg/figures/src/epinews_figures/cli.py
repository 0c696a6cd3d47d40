"""CLI: render one figure from an experiment bundle directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_IDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epinews-figures",
        description="Render epinews CSV bundles to image files.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_plot = sub.add_parser("plot", help="render one figure")
    p_plot.add_argument("--figure", required=True, choices=FIGURE_IDS)
    p_plot.add_argument("--in", dest="input_dir", required=True, type=Path,
                        help="experiment bundle directory (sweep layout)")
    p_plot.add_argument("--out", required=True, type=Path,
                        help="output image path (PNG)")
    p_plot.add_argument("--title", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(FigureSpec(figure=args.figure, input_dir=args.input_dir,
                                output=args.out, title=args.title))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
