#!/usr/bin/env python3
"""Run all four workloads at desk scale and drop raw + summary CSVs under
results/.  Sizes are deliberately small; pass --full for the paper-style
sizes (slow on a laptop)."""

import argparse
import pathlib
import sys

from spmdbench.harness import RunPlan, execute

DESK = {
    "stencil": dict(L=64, iterations=20),
    "stream": dict(N=2 ** 20, tbsize=4096, iterations=20),
    "bude": dict(poses=4096, natpro=128, ppwi=4, wg=64, iterations=5),
    "hf": dict(natoms=16, iterations=5),
}

FULL = {
    "stencil": dict(L=512, iterations=100),
    "stream": dict(N=2 ** 25, iterations=100),
    "bude": dict(poses=65536, ppwi=4, wg=64, iterations=100),
    "hf": dict(natoms=64, iterations=100),
}


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--backend", choices=("ref", "parallel"), default="parallel")
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--full", action="store_true")
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sizes = FULL if args.full else DESK
    for workload, kw in sizes.items():
        plan = RunPlan(workload=workload, backend=args.backend,
                       csv_path=str(outdir / f"{workload}_raw.csv"),
                       summary_csv_path=str(outdir / f"{workload}_summary.csv"),
                       **kw)
        print(f"== {workload} ({args.backend}) ==")
        _, summaries = execute(plan)
        for s in summaries:
            print(f"  {s.kernel:10s} {s.fom_name}={s.fom_value:.6g} "
                  f"min={s.time_min_s * 1e3:.3f}ms mean={s.time_mean_s * 1e3:.3f}ms")
    print(f"CSV files written to {outdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
