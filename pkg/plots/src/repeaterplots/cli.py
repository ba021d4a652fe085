"""Command line entry point: one subcommand per figure kind."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repeaterplots",
        description="Render repeater-simulation sweep CSVs as figures",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"render a {kind} figure")
        p.add_argument("--csv", required=True, help="sweep CSV produced by repeatersim")
        p.add_argument("--out", required=True, help="output image path")
        p.add_argument("--log-x", action="store_true", default=None)
        p.add_argument("--linear-x", dest="log_x", action="store_false")
        p.add_argument("--log-y", action="store_true", default=None)
        p.add_argument("--linear-y", dest="log_y", action="store_false")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        csv_path=args.csv, kind=args.kind, out_path=args.out,
        log_x=args.log_x, log_y=args.log_y,
    )
    try:
        result = render(spec)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.out_path} ({len(result.series)} series, {result.points} points)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
