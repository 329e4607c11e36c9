#!/usr/bin/env python3
"""Benchmark the parallel backend against the sequential reference and print
the per-workload portability table (candidate = parallel, baseline = ref).

This mirrors the intended cross-implementation workflow: produce one summary
CSV per implementation, then join them with the phi command."""

import argparse
import pathlib
import sys

from spmdbench.harness import RunPlan, execute, phi_command

CASES = (
    dict(workload="stencil", L=64, iterations=10),
    dict(workload="stream", N=2 ** 22, tbsize=2 ** 14, iterations=10),
    dict(workload="bude", poses=4096, natpro=128, ppwi=4, wg=64, iterations=3),
    dict(workload="hf", natoms=16, iterations=3),
)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--cap", action="store_true")
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for backend in ("ref", "parallel"):
        rows = []
        path = outdir / f"summary_{backend}.csv"
        for case in CASES:
            plan = RunPlan(backend=backend, workers=args.workers, **case)
            print(f"running {case['workload']} on {backend} ...")
            _, summaries = execute(plan)
            rows += summaries
        from spmdbench.harness import write_csv
        write_csv(rows, path, kind="summary")
        paths[backend] = path
    print()
    phi_command(paths["parallel"], paths["ref"], cap=args.cap)
    return 0


if __name__ == "__main__":
    sys.exit(main())
