"""Command line: plotgen <preset> --in <dir> --out <dir> [--format svg|png]."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figspec import FIGURES
from .render import InputError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotgen", description="render omsqueeze result figures")
    parser.add_argument("preset", choices=sorted(FIGURES) + ["all"])
    parser.add_argument("--in", dest="indir", required=True,
                        help="directory with the CSV/manifest outputs")
    parser.add_argument("--out", dest="outdir", required=True)
    parser.add_argument("--format", choices=("svg", "png"), default="svg")
    args = parser.parse_args(argv)

    presets = sorted(FIGURES) if args.preset == "all" else [args.preset]
    try:
        for preset in presets:
            out = render(preset, Path(args.indir), Path(args.outdir), args.format)
            print(f"wrote {out}")
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
