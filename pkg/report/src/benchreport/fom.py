"""Figure-of-merit formulas re-expressed locally (GB = 1e9 bytes).

Deliberately duplicated from the benchmark harness rather than imported, so
this package depends only on the CSV contract; the shared fixtures
cross-check the two copies.
"""

from __future__ import annotations

ELEM_SIZE = {"f32": 4, "f64": 8}

STREAM_MULT = {"copy": 2, "mul": 2, "add": 3, "triad": 3, "dot": 2}


def parse_params(params: str) -> dict[str, str]:
    out = {}
    for item in params.split(";"):
        if item:
            key, _, value = item.partition("=")
            out[key] = value
    return out


def stencil_gbs(L: int, elem_size: int, time_s: float) -> float:
    fetch = (L ** 3 - 8 - 12 * (L - 2)) * elem_size
    write = (L - 2) ** 3 * elem_size
    return (fetch + write) / (time_s * 1e9)


def stream_gbs(op: str, n: int, elem_size: int, time_s: float) -> float:
    return STREAM_MULT[op] * elem_size * n / (time_s * 1e9)


def bude_gflops(ppwi: int, natlig: int, natpro: int, nposes: int,
                time_s: float) -> float:
    ops_wg = 28 * ppwi + natlig * (2 + 18 * ppwi + natpro * (10 + 30 * ppwi))
    return ops_wg * (nposes // ppwi) / (time_s * 1e9)


def recompute_fom(workload: str, kernel: str, dtype: str, params: str,
                  time_s: float) -> float:
    """Per-iteration figure of merit from one raw row."""
    p = parse_params(params)
    if workload == "stencil":
        return stencil_gbs(int(p["L"]), ELEM_SIZE[dtype], time_s)
    if workload == "stream":
        return stream_gbs(kernel, int(p["N"]), ELEM_SIZE[dtype], time_s)
    if workload == "bude":
        return bude_gflops(int(p["ppwi"]), int(p["natlig"]),
                           int(p["natpro"]), int(p["poses"]), time_s)
    if workload == "hf":
        return time_s
    raise ValueError(f"unknown workload {workload!r}")


def fom_axis_label(workload: str) -> str:
    return {"stencil": "effective bandwidth (GB/s)",
            "stream": "effective bandwidth (GB/s)",
            "bude": "GFLOP/s",
            "hf": "kernel wall-clock (s)"}[workload]
