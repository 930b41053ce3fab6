"""plots <kind> --in <csv> [--in2 <csv>] --out <png>"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render harness CSV output as figures")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="input", required=True,
                        help="input CSV in the kind's schema")
    parser.add_argument("--in2", dest="input2", default=None,
                        help="optional second CSV, same schema, rows appended")
    parser.add_argument("--out", required=True, help="output PNG path")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    inputs = (args.input,) if args.input2 is None else (args.input, args.input2)
    try:
        render(FigureSpec(args.kind, inputs, args.out))
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
