"""Command line entry point: plots <kind> --in <csv> [--in <csv>...] --out <png/svg>."""

import argparse
import sys

from .figures import PLOT_KINDS, render
from .io import SchemaError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from sweep CSV outputs.")
    parser.add_argument("kind", choices=PLOT_KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV", help="input sweep CSV (repeatable)")
    parser.add_argument("--out", required=True, metavar="IMG",
                        help="output image path (.png or .svg)")
    parser.add_argument("--logx", action="store_true",
                        help="logarithmic x axis")
    parser.add_argument("--logy", action="store_true",
                        help="logarithmic y axis")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        render(args.kind, args.inputs, args.out,
               logx=args.logx, logy=args.logy)
    except (SchemaError, OSError) as exc:
        print("error: {}".format(exc), file=sys.stderr)
        return 2
    print("wrote {}".format(args.out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
