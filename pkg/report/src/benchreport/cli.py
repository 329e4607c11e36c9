"""CLI: report bandwidth|throughput|phi --raw <csv...> --summary <csv...> --out <path>."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .io import NoDataError, SchemaError, load_results
from .plots import plot_bandwidth, plot_throughput
from .tables import render_phi_table


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="report",
                                description="render benchmark CSVs")
    sub = p.add_subparsers(dest="command", required=True)

    bw = sub.add_parser("bandwidth", help="per-iteration bandwidth distributions")
    bw.add_argument("--raw", nargs="+", required=True)
    bw.add_argument("--workload", choices=("stencil", "stream"), required=True)
    bw.add_argument("--out", required=True)

    tp = sub.add_parser("throughput", help="docking GFLOP/s vs ppwi")
    tp.add_argument("--summary", nargs="+", required=True)
    tp.add_argument("--out", required=True)

    phi = sub.add_parser("phi", help="portability table (markdown)")
    phi.add_argument("--summary", nargs=2, required=True,
                     metavar=("CANDIDATE", "BASELINE"))
    phi.add_argument("--out", required=True)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "bandwidth":
            written = plot_bandwidth(load_results(args.raw), args.workload,
                                     args.out)
            for p in written:
                print(f"wrote {p}")
        elif args.command == "throughput":
            written = plot_throughput(load_results(args.summary), args.out)
            for p in written:
                print(f"wrote {p}")
        else:
            text = render_phi_table(load_results([args.summary[0]]),
                                    load_results([args.summary[1]]),
                                    args.out)
            print(text)
            print(f"wrote {args.out}")
    except (SchemaError, NoDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
