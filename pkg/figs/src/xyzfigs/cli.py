"""render_figs <kind> <csv> [<csv>...] <out.png/svg>"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figs",
        description="Render publication-style figures from experiment CSV files",
    )
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("paths", nargs="+", help="input CSV file(s) then the output image")
    ns = parser.parse_args(sys.argv[1:] if argv is None else list(argv))
    if len(ns.paths) < 2:
        parser.error("need at least one input CSV and one output image path")
    inputs, out = ns.paths[:-1], ns.paths[-1]
    if not (out.endswith(".png") or out.endswith(".svg")):
        parser.error("output must end in .png or .svg")
    try:
        render(FigureSpec(ns.kind, inputs, out))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
