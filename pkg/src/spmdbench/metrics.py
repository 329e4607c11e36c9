"""Figures of merit, run statistics, the performance-portability mean and an
analytic roofline helper.  GB means 10^9 bytes throughout."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .exec_model import InvalidArgumentError

STREAM_BYTE_MULTIPLIER = {"copy": 2, "mul": 2, "add": 3, "triad": 3, "dot": 2}


def stencil_bandwidth(L: int, elem_size_bytes: int, kernel_time_s: float) -> float:
    """Effective GB/s of one stencil step: bytes fetched plus written for the
    cell data advanced, over the kernel time."""
    if L < 3:
        raise InvalidArgumentError(f"stencil bandwidth needs L >= 3, got {L}")
    if kernel_time_s <= 0:
        raise InvalidArgumentError("kernel time must be positive")
    fetch = (L ** 3 - 8 - 12 * (L - 2)) * elem_size_bytes
    write = (L - 2) ** 3 * elem_size_bytes
    return (fetch + write) / (kernel_time_s * 1e9)


def stream_bandwidth(op: str, N: int, elem_size_bytes: int,
                     kernel_time_s: float) -> float:
    """Effective GB/s based solely on array sizes: two arrays move for
    copy/mul/dot, three for add/triad."""
    if op not in STREAM_BYTE_MULTIPLIER:
        raise InvalidArgumentError(f"unknown stream op {op!r}")
    if kernel_time_s <= 0:
        raise InvalidArgumentError("kernel time must be positive")
    return STREAM_BYTE_MULTIPLIER[op] * elem_size_bytes * N / (kernel_time_s * 1e9)


def bude_total_ops(ppwi: int, natlig: int, natpro: int, nposes: int) -> int:
    """Nominal floating-point operation count of one full docking pass."""
    if ppwi < 1 or nposes % ppwi:
        raise InvalidArgumentError(
            f"nposes={nposes} must be divisible by ppwi={ppwi}")
    ops_wg = 28 * ppwi + natlig * (2 + 18 * ppwi + natpro * (10 + 30 * ppwi))
    return ops_wg * (nposes // ppwi)


def bude_gflops(ppwi: int, natlig: int, natpro: int, nposes: int,
                kernel_time_s: float) -> float:
    if kernel_time_s <= 0:
        raise InvalidArgumentError("kernel time must be positive")
    return bude_total_ops(ppwi, natlig, natpro, nposes) / (kernel_time_s * 1e9)


@dataclass(frozen=True)
class Stats:
    n: int
    min: float
    max: float
    mean: float
    stddev: float  # sample (n-1) standard deviation


def run_stats(times: Sequence[float]) -> Stats:
    if not times:
        raise InvalidArgumentError("cannot aggregate an empty run")
    ts = [float(t) for t in times]
    lo, hi = min(ts), max(ts)
    # fmean can land one ulp outside [min, max] for near-constant samples
    mean = min(max(statistics.fmean(ts), lo), hi)
    return Stats(n=len(ts), min=lo, max=hi, mean=mean,
                 stddev=statistics.stdev(ts) if len(ts) > 1 else 0.0)


@dataclass(frozen=True)
class EfficiencyEntry:
    case_id: str
    candidate_perf: float
    baseline_perf: float
    e: float


def make_efficiency(case_id: str, candidate_perf: float, baseline_perf: float,
                    invert: bool = False) -> EfficiencyEntry:
    """Efficiency ratio of candidate over baseline.  Pass invert=True for
    wall-clock figures of merit so that e > 1 always means the candidate is
    strictly better."""
    if candidate_perf <= 0 or baseline_perf <= 0:
        raise InvalidArgumentError("figures of merit must be positive")
    e = baseline_perf / candidate_perf if invert else candidate_perf / baseline_perf
    return EfficiencyEntry(case_id, candidate_perf, baseline_perf, e)


@dataclass(frozen=True)
class PhiResult:
    entries: tuple[EfficiencyEntry, ...]
    phi: float
    capped: bool

    def effective(self) -> list[float]:
        return [min(en.e, 1.0) if self.capped else en.e for en in self.entries]


def phi_bar(entries: Iterable[EfficiencyEntry], capped: bool = False) -> PhiResult:
    """Arithmetic mean of the efficiency ratios, optionally clamping each
    entry to 1.0 first."""
    entries = tuple(entries)
    if not entries:
        raise InvalidArgumentError("phi needs at least one efficiency entry")
    for en in entries:
        if not math.isfinite(en.e) or en.e < 0:
            raise InvalidArgumentError(f"efficiency {en.case_id} is not finite/>=0")
    es = [min(en.e, 1.0) if capped else en.e for en in entries]
    return PhiResult(entries=entries, phi=statistics.fmean(es), capped=capped)


def format_efficiency(e: float) -> str:
    """Two decimals for ordinary ratios, mantissa-exponent form (e.g.
    '7.0e-3') for tiny ones."""
    if e == 0:
        return "0.00"
    if e >= 0.01:
        return f"{e:.2f}"
    exp = math.floor(math.log10(e))
    mant = e / 10 ** exp
    if round(mant, 1) >= 10.0:
        mant /= 10.0
        exp += 1
    return f"{mant:.1f}e{exp}"


@dataclass(frozen=True)
class HardwarePeaks:
    name: str
    bandwidth_gbs: float
    fp32_tflops: float
    fp64_tflops: float

    def __post_init__(self):
        if min(self.bandwidth_gbs, self.fp32_tflops, self.fp64_tflops) <= 0:
            raise InvalidArgumentError("hardware peaks must be positive")


BUILTIN_PEAKS = {
    "H100": HardwarePeaks("H100", 3900.0, 60.0, 30.0),
    "MI300A": HardwarePeaks("MI300A", 5300.0, 122.6, 61.3),
}


def parse_peaks(text: str) -> dict[str, HardwarePeaks]:
    """Parse the editable peaks config: `name bandwidth fp32 fp64` per line,
    '#' comments allowed."""
    peaks = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 4:
            raise InvalidArgumentError(f"peaks line {ln}: need name + 3 numbers")
        name = " ".join(parts[:-3])
        bw, f32, f64 = (float(v) for v in parts[-3:])
        peaks[name] = HardwarePeaks(name, bw, f32, f64)
    return peaks


def load_peaks(path=None) -> dict[str, HardwarePeaks]:
    if path is None:
        text = resources.files("spmdbench").joinpath(
            "data/hardware_peaks.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return parse_peaks(text)


def roofline_attainable(ai: float, peaks: HardwarePeaks,
                        precision: str) -> float:
    """Attainable FLOP/s at arithmetic intensity `ai` (FLOP/byte):
    min(peak compute, ai * peak bandwidth)."""
    if ai < 0:
        raise InvalidArgumentError("arithmetic intensity must be >= 0")
    if precision == "fp32":
        peak_flops = peaks.fp32_tflops * 1e12
    elif precision == "fp64":
        peak_flops = peaks.fp64_tflops * 1e12
    else:
        raise InvalidArgumentError(f"precision must be fp32 or fp64, got {precision!r}")
    return min(peak_flops, ai * peaks.bandwidth_gbs * 1e9)
