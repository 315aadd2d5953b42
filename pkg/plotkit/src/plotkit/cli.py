"""plotkit <kind> <input.json> -o <out.png>"""
from __future__ import annotations

import argparse
import sys

from .render import FigureJob, RenderError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render zss JSON outputs into static figures."
    )
    parser.add_argument("kind", choices=["stokes", "migrate", "spectrum", "gapscaling"])
    parser.add_argument("input", help="JSON produced by the zss CLI")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        info = render(FigureJob(kind=args.kind, input_path=args.input, out_path=args.out))
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if "slope" in info:
        print(f"fitted slope: {info['slope']!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
