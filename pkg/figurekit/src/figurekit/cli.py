"""Command line wrapper for the chart renderer."""

import argparse
import sys

from .plotting import SERIES_KEYS, PlotSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figurekit",
        description="Plot relative-efficiency sweeps from harness CSV output",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    plot_p = sub.add_parser("plot", help="render mean eta versus snapshot count")
    plot_p.add_argument("--csv", required=True, help="raw.csv from a sweep")
    plot_p.add_argument("--series", required=True, choices=SERIES_KEYS,
                        help="which column distinguishes the lines")
    plot_p.add_argument("--out", required=True, help="output image path")
    plot_p.add_argument("--band", action="store_true",
                        help="shade +/- one standard deviation")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "plot":
        spec = PlotSpec(csv_path=args.csv, series=args.series,
                        out_path=args.out, band=args.band)
        try:
            series = render(spec)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {args.out} with {len(series)} series")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
