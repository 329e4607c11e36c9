"""Stream memory-bandwidth kernels: copy, mul, add, triad and a dot product
with block-shared partials and a halving tree reduction.

All arrays stay element-wise uniform under the four mutating kernels, so a
scalar recurrence (:func:`stream_expected`) serves as the verification
oracle.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..exec_model import (Backend, Buffer, Dim3, ElemType, InvalidArgumentError,
                          LaunchConfig, create_buffer, launch)

STREAM_OPS = ("copy", "mul", "add", "triad", "dot")


@dataclass(frozen=True)
class StreamConfig:
    N: int
    scalar: float = 0.4
    initA: float = 0.1
    initB: float = 0.2
    initC: float = 0.0
    iterations: int = 100
    dot_num_blocks: int = 256
    tbsize: int = 1024
    elem_type: ElemType = ElemType.f64


def make_stream_config(N: int, elem_type: ElemType = ElemType.f64,
                       tbsize: int = 1024, dot_num_blocks: int = 256,
                       iterations: int = 100, scalar: float = 0.4,
                       initA: float = 0.1, initB: float = 0.2,
                       initC: float = 0.0) -> StreamConfig:
    if tbsize < 1 or tbsize & (tbsize - 1):
        raise InvalidArgumentError(f"tbsize must be a power of two, got {tbsize}")
    if N < 1 or N % tbsize:
        raise InvalidArgumentError(f"N={N} must be divisible by tbsize={tbsize}")
    if dot_num_blocks < 1:
        raise InvalidArgumentError("dot_num_blocks must be >= 1")
    return StreamConfig(N=N, scalar=scalar, initA=initA, initB=initB,
                        initC=initC, iterations=iterations,
                        dot_num_blocks=dot_num_blocks, tbsize=tbsize,
                        elem_type=elem_type)


# Each block handles the contiguous slice [blk*tb, blk*tb + tb); the
# vectorized statement is the "for each thread in block" loop.

def _copy_block(ctx, a, c):
    lo = ctx.block_idx.x * ctx.block_dim.x
    hi = lo + ctx.block_dim.x
    c.data[lo:hi] = a.data[lo:hi]


def _mul_block(ctx, b, c, scalar):
    lo = ctx.block_idx.x * ctx.block_dim.x
    hi = lo + ctx.block_dim.x
    np.multiply(c.data[lo:hi], scalar, out=b.data[lo:hi])


def _add_block(ctx, a, b, c):
    lo = ctx.block_idx.x * ctx.block_dim.x
    hi = lo + ctx.block_dim.x
    np.add(a.data[lo:hi], b.data[lo:hi], out=c.data[lo:hi])


def _triad_block(ctx, a, b, c, scalar):
    lo = ctx.block_idx.x * ctx.block_dim.x
    hi = lo + ctx.block_dim.x
    np.multiply(c.data[lo:hi], scalar, out=a.data[lo:hi])
    np.add(a.data[lo:hi], b.data[lo:hi], out=a.data[lo:hi])


def _dot_block(ctx, a, b, sums, N):
    tb = ctx.block_dim.x
    tb_sum = ctx.shared
    tb_sum[:] = 0  # thread loop: clear this block's partials
    stride = tb * ctx.grid_dim.x
    pos = ctx.block_idx.x * tb
    # Grid-stride accumulation: thread t owns indices pos+t, pos+t+stride, ...
    while pos < N:
        n = min(tb, N - pos)
        np.add(tb_sum[:n], a.data[pos:pos + n] * b.data[pos:pos + n],
               out=tb_sum[:n])
        pos += stride
    # Halving tree reduction; each loop iteration is barrier-separated.
    offset = tb // 2
    while offset > 0:
        np.add(tb_sum[:offset], tb_sum[offset:2 * offset], out=tb_sum[:offset])
        offset //= 2
    sums.data[ctx.block_idx.x] = tb_sum[0]


def _launch_1to1(body, cfg: StreamConfig, backend: Backend, args) -> float:
    lc = LaunchConfig(grid_dim=Dim3(cfg.N // cfg.tbsize),
                      block_dim=Dim3(cfg.tbsize))
    return launch(body, lc, backend, args=args)


def dot_product(a: Buffer, b: Buffer, cfg: StreamConfig,
                backend: Backend) -> tuple[float, float, float]:
    """First-level block reduction followed by a sequential host sum over the
    block partials.  Returns (value, kernel_seconds, host_seconds)."""
    sums = create_buffer(cfg.dot_num_blocks, cfg.elem_type, 0.0, name="sums")
    lc = LaunchConfig(grid_dim=Dim3(cfg.dot_num_blocks),
                      block_dim=Dim3(cfg.tbsize))
    t_kernel = launch(_dot_block, lc, backend, args=(a, b, sums, cfg.N),
                      shared_len=cfg.tbsize, shared_elem=cfg.elem_type)
    t0 = time.perf_counter()
    acc = cfg.elem_type.dtype(0.0)
    for v in sums.data:
        acc = acc + v
    t_host = time.perf_counter() - t0
    return float(acc), t_kernel, t_host


@dataclass
class StreamResult:
    a: Buffer
    b: Buffer
    c: Buffer
    # Reported per-iteration durations; the dot entry includes both the
    # first-level kernel and the host partial sum.
    times: dict[str, list[float]] = field(default_factory=dict)
    dot_kernel_times: list[float] = field(default_factory=list)
    dot_value: float = float("nan")


def stream_kernels(cfg: StreamConfig, backend: Backend,
                   iterations: Optional[int] = None) -> StreamResult:
    """Run copy, mul, add, triad, dot in order for the requested number of
    iterations, timing each kernel independently."""
    iters = cfg.iterations if iterations is None else iterations
    if iters < 1:
        raise InvalidArgumentError("iterations must be >= 1")
    a = create_buffer(cfg.N, cfg.elem_type, cfg.initA, name="a")
    b = create_buffer(cfg.N, cfg.elem_type, cfg.initB, name="b")
    c = create_buffer(cfg.N, cfg.elem_type, cfg.initC, name="c")
    scalar = cfg.elem_type.dtype(cfg.scalar)
    res = StreamResult(a=a, b=b, c=c,
                       times={op: [] for op in STREAM_OPS})
    for _ in range(iters):
        res.times["copy"].append(_launch_1to1(_copy_block, cfg, backend, (a, c)))
        res.times["mul"].append(_launch_1to1(_mul_block, cfg, backend, (b, c, scalar)))
        res.times["add"].append(_launch_1to1(_add_block, cfg, backend, (a, b, c)))
        res.times["triad"].append(_launch_1to1(_triad_block, cfg, backend, (a, b, c, scalar)))
        value, t_kernel, t_host = dot_product(a, b, cfg, backend)
        res.times["dot"].append(t_kernel + t_host)
        res.dot_kernel_times.append(t_kernel)
        res.dot_value = value
    return res


def stream_expected(cfg: StreamConfig, niter: int) -> tuple[float, float, float, float]:
    """Scalar recurrence oracle: applies the four mutating kernels `niter`
    times to representative scalars and returns (a, b, c, dot) where
    dot = N * a * b."""
    if niter < 0:
        raise InvalidArgumentError("niter must be >= 0")
    dt = cfg.elem_type.dtype
    a, b, c, s = dt(cfg.initA), dt(cfg.initB), dt(cfg.initC), dt(cfg.scalar)
    for _ in range(niter):
        c = a                 # copy
        b = s * c             # mul
        c = a + b             # add
        a = s * c + b         # triad (same op order as the kernel)
    dot = float(cfg.N) * float(a) * float(b)
    return float(a), float(b), float(c), dot
