"""Command-line entry point: `plots render --kind <k> --in <csv...> --out
<image>`. Exit 0 on success (including annotated empty-input panels), 2 on
usage or schema errors."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, SchemaError, render


def build_parser():
    p = argparse.ArgumentParser(
        prog="plots", description="render figures from recourse CSV outputs")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("render", help="render one figure")
    sp.add_argument("--kind", required=True, choices=KINDS)
    sp.add_argument("--in", dest="inputs", required=True, nargs="+",
                    metavar="CSV", help="input CSV file(s)")
    sp.add_argument("--out", required=True, help="output image (png/pdf/svg)")
    sp.add_argument("--title", default=None)
    sp.add_argument("--dpi", type=int, default=150)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else 0
    try:
        spec = PlotSpec(kind=args.kind, inputs=tuple(args.inputs),
                        out=args.out, title=args.title, dpi=args.dpi)
        render(spec)
    except (SchemaError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
