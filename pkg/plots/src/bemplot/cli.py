"""Command-line entry point: ``bemplot plot --kind K --in CSV --out PNG``."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, PlotSpec, render

__all__ = ["main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bemplot", description="Render sweep CSVs as benchmark figures"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one figure")
    plot.add_argument("--kind", required=True, choices=KINDS)
    plot.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        help="input CSV (repeatable; rows are concatenated)",
    )
    plot.add_argument("--out", required=True, help="output PNG path")
    plot.add_argument(
        "--linear-y", action="store_true", help="linear instead of log y axis"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        inputs=tuple(args.inputs),
        output=args.out,
        logy=not args.linear_y,
    )
    try:
        render(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
