"""gmfg-plot: render convergence curves from experiment CSVs."""

from __future__ import annotations

import argparse
import sys

from .curves import ColumnError, GridError, render_curves


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gmfg-plot")
    parser.add_argument("csvs", nargs="+", help="per-seed CSV files")
    parser.add_argument("--metric", default="exploitability")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--log-y", action="store_true", dest="log_y")
    args = parser.parse_args(argv)
    try:
        bundle = render_curves(args.csvs, args.metric, args.out, log_scale=args.log_y)
    except (ColumnError, GridError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {args.out}: {bundle.meta['n_seeds']} seed(s), "
        f"{bundle.meta['n_iterations']} iterations"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
