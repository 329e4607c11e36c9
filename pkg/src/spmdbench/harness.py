"""Benchmark orchestration: run plans, warm-up discipline, verification
gating, CSV emission and the performance-portability comparison workflow.

Exit codes: 0 success, 1 usage, 2 verification failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exec_model import (Backend, ElemType, InvalidArgumentError,
                         available_workers, create_buffer, parallel_backend,
                         reference_backend)
from .kernels import (bude_gen_deck, fasten_kernel, fasten_reference,
                      hf_gen_system, hf_kernel, hf_reference,
                      laplacian_kernel, make_stencil_config,
                      make_stream_config, stencil_init, stencil_verify,
                      stream_expected, stream_kernels, STREAM_OPS)
from .metrics import (bude_gflops, format_efficiency, make_efficiency,
                      phi_bar, run_stats, stencil_bandwidth, stream_bandwidth)

WORKLOADS = ("stencil", "stream", "bude", "hf")
WORKERS_ENV = "SPMDBENCH_WORKERS"

RAW_HEADER = "workload,kernel,backend,dtype,params,iter,time_s"
SUMMARY_HEADER = ("workload,kernel,backend,dtype,params,fom_name,fom_value,"
                  "time_min_s,time_mean_s,time_max_s,time_stddev_s")

STENCIL_TOL = {ElemType.f64: 1e-8, ElemType.f32: 1e-2}
STREAM_REL_TOL = {ElemType.f64: 1e-8, ElemType.f32: 1e-4}
HF_ABS_TOL = 1e-8


class VerificationError(RuntimeError):
    """A kernel's output failed its oracle check."""


class UsageError(Exception):
    """Bad command line."""


@dataclass
class RunPlan:
    workload: str
    backend: str = "ref"              # "ref" | "parallel"
    workers: Optional[int] = None
    elem_type: ElemType = ElemType.f64
    iterations: int = 100
    warmup_discard: int = 1
    L: int = 64                       # stencil
    N: int = 2 ** 25                  # stream
    dot_num_blocks: int = 256
    tbsize: Optional[int] = None      # per-workload block size override
    ppwi: int = 4                     # bude
    wg: int = 64
    poses: int = 65536
    natlig: int = 26
    natpro: int = 938
    natoms: int = 64                  # hf
    ngauss: int = 3
    seed: int = 1
    csv_path: Optional[str] = None
    summary_csv_path: Optional[str] = None

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be >= 1")
        if self.warmup_discard < 0:
            raise InvalidArgumentError("warmup_discard must be >= 0")
        if self.workload not in WORKLOADS:
            raise InvalidArgumentError(f"unknown workload {self.workload!r}")


@dataclass(frozen=True)
class BenchmarkRecord:
    workload: str
    kernel: str
    backend: str
    dtype: str
    params: str
    iter: int         # post-warm-up launch index, from 0
    time_s: float


@dataclass(frozen=True)
class SummaryRecord:
    workload: str
    kernel: str
    backend: str
    dtype: str
    params: str
    fom_name: str
    fom_value: float
    time_min_s: float
    time_mean_s: float
    time_max_s: float
    time_stddev_s: float


def resolve_backend(plan: RunPlan) -> Backend:
    if plan.backend == "ref":
        return reference_backend()
    if plan.backend != "parallel":
        raise InvalidArgumentError(f"unknown backend {plan.backend!r}")
    workers = plan.workers
    if workers is None and os.environ.get(WORKERS_ENV):
        workers = int(os.environ[WORKERS_ENV])
    return parallel_backend(workers or available_workers())


def _summary(workload, kernel, backend, dtype, params, fom_name, fom_value,
             stats) -> SummaryRecord:
    return SummaryRecord(workload, kernel, backend, dtype, params, fom_name,
                         fom_value, stats.min, stats.mean, stats.max,
                         stats.stddev)


def _records(workload, kernel, backend, dtype, params, times):
    return [BenchmarkRecord(workload, kernel, backend, dtype, params, i, t)
            for i, t in enumerate(times)]


def _run_stencil(plan: RunPlan, backend: Backend):
    cfg = make_stencil_config(plan.L, plan.elem_type, block_x=plan.tbsize,
                              iterations=plan.iterations)
    g, b = cfg.launch.grid_dim, cfg.launch.block_dim
    params = f"L={plan.L};grid={g.x}x{g.y}x{g.z};block={b.x}x1x1"
    u = stencil_init(cfg)
    f = create_buffer(plan.L ** 3, plan.elem_type, 0.0, name="f")
    times = [laplacian_kernel(f, u, cfg, backend)
             for _ in range(plan.warmup_discard + plan.iterations)]
    err = stencil_verify(f, cfg)
    tol = STENCIL_TOL[plan.elem_type]
    if err > tol:
        raise VerificationError(
            f"laplacian: max interior deviation {err:.6e} exceeds tolerance {tol:.1e}")
    post = times[plan.warmup_discard:]
    stats = run_stats(post)
    fom = stencil_bandwidth(plan.L, plan.elem_type.size_bytes, stats.min)
    dtype = plan.elem_type.value
    return (_records("stencil", "laplacian", backend.label, dtype, params, post),
            [_summary("stencil", "laplacian", backend.label, dtype, params,
                      "bandwidth_gbs", fom, stats)])


def _run_stream(plan: RunPlan, backend: Backend):
    cfg = make_stream_config(plan.N, plan.elem_type,
                             tbsize=plan.tbsize or 1024,
                             dot_num_blocks=plan.dot_num_blocks,
                             iterations=plan.iterations)
    params = f"N={cfg.N};tbsize={cfg.tbsize};dot_blocks={cfg.dot_num_blocks}"
    total = plan.warmup_discard + plan.iterations
    res = stream_kernels(cfg, backend, iterations=total)
    exp = stream_expected(cfg, total)
    tol = STREAM_REL_TOL[plan.elem_type]
    for buf, expected, name in ((res.a, exp[0], "a"), (res.b, exp[1], "b"),
                                (res.c, exp[2], "c")):
        if not np.all(buf.data == buf.data[0]):
            raise VerificationError(f"stream: array {name} is not uniform")
        got = float(buf.data[0])
        rel = abs(got - expected) / (abs(expected) or 1.0)
        if rel > tol:
            raise VerificationError(
                f"stream {name}: value {got!r} vs expected {expected!r} "
                f"(relative {rel:.3e} > {tol:.1e})")
    rel = abs(res.dot_value - exp[3]) / (abs(exp[3]) or 1.0)
    if rel > tol:
        raise VerificationError(
            f"stream dot: {res.dot_value!r} vs expected {exp[3]!r} "
            f"(relative {rel:.3e} > {tol:.1e})")
    dtype = plan.elem_type.value
    records, summaries = [], []
    for op in STREAM_OPS:
        post = res.times[op][plan.warmup_discard:]
        stats = run_stats(post)
        fom = stream_bandwidth(op, cfg.N, plan.elem_type.size_bytes, stats.min)
        records += _records("stream", op, backend.label, dtype, params, post)
        summaries.append(_summary("stream", op, backend.label, dtype, params,
                                  "bandwidth_gbs", fom, stats))
    return records, summaries


def _run_bude(plan: RunPlan, backend: Backend):
    deck = bude_gen_deck(plan.seed, plan.natlig, plan.natpro, plan.poses,
                         plan.ppwi, plan.wg)
    params = (f"ppwi={deck.ppwi};wg={deck.wg};poses={deck.nposes};"
              f"natlig={deck.natlig};natpro={deck.natpro};seed={plan.seed}")
    times, out = [], None
    for _ in range(plan.warmup_discard + plan.iterations):
        out, t = fasten_kernel(deck, backend)
        times.append(t)
    ref = fasten_reference(deck)
    if not np.array_equal(out.data, ref):
        worst = float(np.abs(out.data.astype(np.float64)
                             - ref.astype(np.float64)).max())
        raise VerificationError(
            f"fasten: kernel output differs from the scalar oracle "
            f"(max deviation {worst:.6e}, tolerance bitwise 0)")
    post = times[plan.warmup_discard:]
    stats = run_stats(post)
    fom = bude_gflops(deck.ppwi, deck.natlig, deck.natpro, deck.nposes, stats.min)
    return (_records("bude", "fasten", backend.label, "f32", params, post),
            [_summary("bude", "fasten", backend.label, "f32", params,
                      "gflops", fom, stats)])


def _run_hf(plan: RunPlan, backend: Backend):
    system = hf_gen_system(plan.natoms, plan.ngauss)
    tbsize = plan.tbsize or 256
    params = f"natoms={plan.natoms};ngauss={plan.ngauss};tbsize={tbsize}"
    times, fock = [], None
    for _ in range(plan.warmup_discard + plan.iterations):
        fock, t = hf_kernel(system, backend, tbsize=tbsize)
        times.append(t)
    ref = hf_reference(system)
    worst = float(np.abs(fock.data - ref).max())
    if worst > HF_ABS_TOL:
        raise VerificationError(
            f"fock: max deviation {worst:.6e} from the sequential oracle "
            f"exceeds tolerance {HF_ABS_TOL:.1e}")
    post = times[plan.warmup_discard:]
    stats = run_stats(post)
    return (_records("hf", "fock", backend.label, "f64", params, post),
            [_summary("hf", "fock", backend.label, "f64", params,
                      "wall_clock_s", stats.min, stats)])


_RUNNERS = {"stencil": _run_stencil, "stream": _run_stream,
            "bude": _run_bude, "hf": _run_hf}


def execute(plan: RunPlan):
    """Run warm-up plus measured launches, verify the final output against
    the workload oracle, and return (records, summaries)."""
    backend = resolve_backend(plan)
    records, summaries = _RUNNERS[plan.workload](plan, backend)
    if plan.csv_path:
        write_csv(records, plan.csv_path, kind="raw")
    if plan.summary_csv_path:
        write_csv(summaries, plan.summary_csv_path, kind="summary")
    return records, summaries


def verify_plan(plan: RunPlan) -> None:
    """Run the workload oracles once at the plan's sizes; raises
    VerificationError on mismatch."""
    quick = dataclasses.replace(plan, iterations=1, warmup_discard=0,
                                csv_path=None, summary_csv_path=None)
    execute(quick)


# ---------------------------------------------------------------------------
# CSV I/O


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def write_csv(rows, path, kind: Optional[str] = None) -> None:
    """Write raw benchmark records or summary records.  Exact headers, LF
    endings, decimal point, full-precision scientific notation."""
    if kind is None:
        if not rows:
            raise InvalidArgumentError("cannot infer CSV kind from no rows")
        kind = "raw" if isinstance(rows[0], BenchmarkRecord) else "summary"
    lines = [RAW_HEADER if kind == "raw" else SUMMARY_HEADER]
    for r in rows:
        if kind == "raw":
            lines.append(f"{r.workload},{r.kernel},{r.backend},{r.dtype},"
                         f"{r.params},{r.iter},{_fmt(r.time_s)}")
        else:
            lines.append(f"{r.workload},{r.kernel},{r.backend},{r.dtype},"
                         f"{r.params},{r.fom_name},{_fmt(r.fom_value)},"
                         f"{_fmt(r.time_min_s)},{_fmt(r.time_mean_s)},"
                         f"{_fmt(r.time_max_s)},{_fmt(r.time_stddev_s)}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_lines(path, header):
    with open(path, newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if not lines or lines[0] != header:
        raise InvalidArgumentError(
            f"{path}: header mismatch, expected {header!r}")
    return [ln for ln in lines[1:] if ln]


def read_raw_csv(path) -> list[BenchmarkRecord]:
    out = []
    for ln in _read_lines(path, RAW_HEADER):
        w, k, b, d, p, it, t = ln.split(",")
        out.append(BenchmarkRecord(w, k, b, d, p, int(it), float(t)))
    return out


def read_summary_csv(path) -> list[SummaryRecord]:
    out = []
    for ln in _read_lines(path, SUMMARY_HEADER):
        w, k, b, d, p, fn, fv, tmin, tmean, tmax, tsd = ln.split(",")
        out.append(SummaryRecord(w, k, b, d, p, fn, float(fv), float(tmin),
                                 float(tmean), float(tmax), float(tsd)))
    return out


# ---------------------------------------------------------------------------
# Performance-portability comparison


def phi_command(candidate_csv, baseline_csv, cap: bool = False,
                out=None):
    """Join two summary CSVs on (workload, kernel, dtype, params), build
    correctly oriented efficiency ratios and print per-workload tables with
    their arithmetic-mean portability score."""
    out = out if out is not None else sys.stdout
    cand = read_summary_csv(candidate_csv)
    base = read_summary_csv(baseline_csv)
    key = lambda r: (r.workload, r.kernel, r.dtype, r.params)
    for name, rows in (("candidate", cand), ("baseline", base)):
        seen = set()
        for r in rows:
            if key(r) in seen:
                raise UsageError(
                    f"{name} csv holds several rows for key {key(r)}; "
                    "write one summary per implementation")
            seen.add(key(r))
    base_map = {key(r): r for r in base}
    matched: dict[str, list] = {}
    unmatched = [key(r) for r in cand if key(r) not in base_map]
    cand_keys = {key(r) for r in cand}
    unmatched += [k for k in base_map if k not in cand_keys]
    results = {}
    for r in cand:
        other = base_map.get(key(r))
        if other is None:
            continue
        if other.fom_name != r.fom_name:
            raise InvalidArgumentError(
                f"fom mismatch for {key(r)}: {r.fom_name} vs {other.fom_name}")
        invert = r.fom_name == "wall_clock_s"
        case = f"{r.kernel}|{r.dtype}|{r.params}"
        entry = make_efficiency(case, r.fom_value, other.fom_value,
                                invert=invert)
        matched.setdefault(r.workload, []).append((entry, invert))
    if not matched:
        for k in unmatched:
            print(f"unmatched key: {k}", file=out)
        raise UsageError("no matching (workload, kernel, dtype, params) keys")
    for workload in sorted(matched):
        pairs = matched[workload]
        res = phi_bar([en for en, _ in pairs], capped=cap)
        results[workload] = res
        print(f"workload: {workload}", file=out)
        for (entry, invert), eff in zip(pairs, res.effective()):
            note = "  [wall-clock, inverted ratio]" if invert else ""
            print(f"  {entry.case_id}: candidate={entry.candidate_perf:.6g} "
                  f"baseline={entry.baseline_perf:.6g} "
                  f"e={format_efficiency(eff)}{note}", file=out)
        label = "capped" if cap else "uncapped"
        print(f"  phi = {format_efficiency(res.phi)} "
              f"({len(pairs)} cases, {label})", file=out)
    for k in unmatched:
        print(f"unmatched key: {k}", file=out)
    return results


# ---------------------------------------------------------------------------
# CLI


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="spmdbench",
                description="SPMD science-kernel benchmark suite on CPU backends")
    sub = p.add_subparsers(dest="command")

    def add_plan_flags(sp):
        sp.add_argument("workload", choices=WORKLOADS)
        sp.add_argument("--backend", choices=("ref", "parallel"), default="ref")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--dtype", choices=("f32", "f64"), default=None)
        sp.add_argument("--iters", type=int, default=100)
        sp.add_argument("--L", type=int, default=64)
        sp.add_argument("--N", type=int, default=2 ** 25)
        sp.add_argument("--tbsize", type=int, default=None)
        sp.add_argument("--ppwi", type=int, default=4)
        sp.add_argument("--wg", type=int, default=64)
        sp.add_argument("--poses", type=int, default=65536)
        sp.add_argument("--natoms", type=int, default=64)
        sp.add_argument("--ngauss", type=int, default=3)
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--csv", default=None)
        sp.add_argument("--summary-csv", default=None)

    add_plan_flags(sub.add_parser("run", help="benchmark a workload"))
    add_plan_flags(sub.add_parser("verify", help="run workload oracles only"))
    phi = sub.add_parser("phi", help="performance-portability comparison")
    phi.add_argument("--candidate", required=True)
    phi.add_argument("--baseline", required=True)
    phi.add_argument("--cap", action="store_true")
    sub.add_parser("list", help="print workloads and their defaults")
    return p


def _plan_from_args(ns) -> RunPlan:
    if ns.dtype is None:
        elem = ElemType.f32 if ns.workload == "bude" else ElemType.f64
    else:
        elem = ElemType(ns.dtype)
        if ns.workload == "bude" and elem is not ElemType.f32:
            raise UsageError("bude runs in f32 only")
        if ns.workload == "hf" and elem is not ElemType.f64:
            raise UsageError("hf runs in f64 only")
    try:
        return RunPlan(workload=ns.workload, backend=ns.backend,
                       workers=ns.workers, elem_type=elem,
                       iterations=ns.iters, L=ns.L, N=ns.N,
                       tbsize=ns.tbsize, ppwi=ns.ppwi, wg=ns.wg,
                       poses=ns.poses, natoms=ns.natoms, ngauss=ns.ngauss,
                       seed=ns.seed, csv_path=ns.csv,
                       summary_csv_path=ns.summary_csv)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from exc


def parse_cli(argv: Sequence[str]):
    """Returns (command, payload): ('run'|'verify', RunPlan), ('phi', ns) or
    ('list', None)."""
    ns = _build_parser().parse_args(list(argv))
    if ns.command in ("run", "verify"):
        return ns.command, _plan_from_args(ns)
    if ns.command == "phi":
        return "phi", ns
    if ns.command == "list":
        return "list", None
    raise UsageError("expected a subcommand: run, verify, phi or list")


def _print_list(out=None):
    out = out if out is not None else sys.stdout
    print("workloads and defaults:", file=out)
    print("  stencil  L=64 (paper sizes 512/1024), dtype f64/f32, "
          "block via --tbsize (default min(L,256))", file=out)
    print("  stream   N=2^25, tbsize=1024, dot_num_blocks=256, "
          "init a/b/c = 0.1/0.2/0.0, scalar 0.4", file=out)
    print("  bude     poses=65536, ppwi=4, wg=64, natlig=26, natpro=938, f32",
          file=out)
    print("  hf       natoms=64 (paper sizes 64/128/256), ngauss=3, "
          "tbsize=256, f64", file=out)
    print("common: --backend ref|parallel, --workers N "
          f"(or ${WORKERS_ENV}), --iters 100 (+1 discarded warm-up), "
          "--csv/--summary-csv", file=out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        command, payload = parse_cli(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if command == "list":
            _print_list()
        elif command == "phi":
            phi_command(payload.candidate, payload.baseline, cap=payload.cap)
        elif command == "verify":
            verify_plan(payload)
            print(f"verify {payload.workload}: all oracles passed")
        else:
            _, summaries = execute(payload)
            for s in summaries:
                print(f"{s.workload}/{s.kernel} [{s.backend},{s.dtype}] "
                      f"{s.fom_name}={s.fom_value:.6g} "
                      f"min={s.time_min_s * 1e3:.4g}ms "
                      f"mean={s.time_mean_s * 1e3:.4g}ms n={payload.iterations}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
