"""Vendor-neutral SPMD execution substrate.

Kernels are written at block granularity: a kernel is a plain function
``kernel(ctx, *args)`` that receives a :class:`BlockContext` and executes the
work of every thread in that block.  "For each thread in block" loops are
expressed as vectorized numpy statements over the thread index; each such
segment boundary acts as a block-wide barrier.  Blocks are independent except
for atomic accumulation, so the substrate may run them sequentially
(reference backend) or distribute whole blocks over a thread pool
(parallel backend).
"""

from __future__ import annotations

import atexit
import enum
import inspect
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np


class InvalidArgumentError(ValueError):
    """A precondition on an operation argument was violated."""


class IndexedAccessError(IndexError):
    """An element access fell outside a buffer's valid index range."""


class ElemType(enum.Enum):
    """Scalar element type of a buffer (IEEE 754 binary32 / binary64)."""

    f32 = "f32"
    f64 = "f64"

    @property
    def size_bytes(self) -> int:
        return 4 if self is ElemType.f32 else 8

    @property
    def dtype(self):
        return np.float32 if self is ElemType.f32 else np.float64


class Dim3(NamedTuple):
    x: int
    y: int = 1
    z: int = 1

    @property
    def volume(self) -> int:
        return self.x * self.y * self.z


def dim3(x, y=1, z=1) -> Dim3:
    return Dim3(int(x), int(y), int(z))


class Buffer:
    """Flat typed scalar array acting as the device-memory analogue.

    Elements never written retain the fill value given at creation.  Scalar
    accesses through :meth:`load` / :meth:`store` are bounds checked; kernels
    that index vectorized slices are responsible for staying in range via
    their guards.
    """

    __slots__ = ("elem_type", "data", "name", "_lock")

    def __init__(self, elem_type: ElemType, data: np.ndarray, name: str = "buffer"):
        self.elem_type = elem_type
        self.data = data
        self.name = name
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.data.shape[0]

    def _check_index(self, index: int) -> int:
        index = int(index)
        if index < 0 or index >= len(self):
            raise IndexedAccessError(
                f"buffer '{self.name}': index {index} out of range [0, {len(self)})"
            )
        return index

    def load(self, index: int) -> float:
        return float(self.data[self._check_index(index)])

    def store(self, index: int, value) -> None:
        self.data[self._check_index(index)] = value

    def to_numpy(self) -> np.ndarray:
        return np.array(self.data, copy=True)


def create_buffer(length: int, elem_type: ElemType, fill, name: str = "buffer") -> Buffer:
    """Allocate a buffer of `length` elements, all equal to `fill`."""
    if not isinstance(length, (int, np.integer)) or length < 1:
        raise InvalidArgumentError(f"buffer length must be >= 1, got {length!r}")
    data = np.full(int(length), fill, dtype=elem_type.dtype)
    return Buffer(elem_type, data, name)


def atomic_add(buf: Buffer, index: int, delta) -> float:
    """Atomically add `delta` to buf[index]; returns the value seen before."""
    index = buf._check_index(index)
    d = buf.elem_type.dtype(delta)
    with buf._lock:
        old = buf.data[index]
        buf.data[index] = old + d
    return float(old)


def atomic_add_many(buf: Buffer, indices: np.ndarray, deltas: np.ndarray) -> None:
    """Atomic scatter-add: the bulk form of :func:`atomic_add` used by
    vectorized thread loops.  Duplicate indices accumulate, and the whole
    scatter is atomic with respect to other callers on the same buffer."""
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= len(buf)):
        bad = int(indices[(indices < 0) | (indices >= len(buf))][0])
        raise IndexedAccessError(
            f"buffer '{buf.name}': index {bad} out of range [0, {len(buf)})"
        )
    with buf._lock:
        np.add.at(buf.data, indices, deltas)


@dataclass(frozen=True)
class LaunchConfig:
    grid_dim: Dim3
    block_dim: Dim3

    def __post_init__(self):
        for name, d in (("grid_dim", self.grid_dim), ("block_dim", self.block_dim)):
            if min(d.x, d.y, d.z) < 1:
                raise InvalidArgumentError(f"{name} components must be >= 1, got {d}")


class BlockContext:
    """Per-block view handed to kernels: indices, geometry and the
    block-local shared scratch region (zero-initialized, visible only
    within one block)."""

    __slots__ = ("block_idx", "block_dim", "grid_dim", "shared")

    def __init__(self, block_idx: Dim3, block_dim: Dim3, grid_dim: Dim3,
                 shared: Optional[np.ndarray]):
        self.block_idx = block_idx
        self.block_dim = block_dim
        self.grid_dim = grid_dim
        self.shared = shared


class BackendKind(enum.Enum):
    reference_sequential = "ref"
    parallel_cpu = "parallel"


@dataclass(frozen=True)
class Backend:
    """Execution backend.  The reference backend runs blocks one at a time in
    ascending linearized order and is bit-deterministic for kernels without
    atomics; the parallel backend distributes whole blocks over a fixed
    worker pool."""

    kind: BackendKind
    worker_count: int = 1

    def __post_init__(self):
        if self.worker_count < 1:
            raise InvalidArgumentError("worker_count must be >= 1")

    @property
    def label(self) -> str:
        return self.kind.value


def available_workers() -> int:
    import os

    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def reference_backend() -> Backend:
    return Backend(BackendKind.reference_sequential, 1)


def parallel_backend(workers: Optional[int] = None) -> Backend:
    return Backend(BackendKind.parallel_cpu, workers or available_workers())


_pools: dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()


def _pool(workers: int) -> ThreadPoolExecutor:
    with _pools_lock:
        pool = _pools.get(workers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=workers,
                                      thread_name_prefix="spmd-worker")
            _pools[workers] = pool
        return pool


@atexit.register
def _shutdown_pools():
    with _pools_lock:
        for pool in _pools.values():
            pool.shutdown(wait=False, cancel_futures=True)
        _pools.clear()


def _kernel_arity_ok(kernel: Callable, nargs: int) -> bool:
    try:
        sig = inspect.signature(kernel)
    except (TypeError, ValueError):
        return True
    params = list(sig.parameters.values())
    if any(p.kind is inspect.Parameter.VAR_POSITIONAL for p in params):
        return True
    positional = [p for p in params
                  if p.kind in (inspect.Parameter.POSITIONAL_ONLY,
                                inspect.Parameter.POSITIONAL_OR_KEYWORD)]
    required = sum(1 for p in positional if p.default is inspect.Parameter.empty)
    return required <= nargs <= len(positional)


def launch(kernel: Callable, cfg: LaunchConfig, backend: Backend,
           args: Sequence = (), shared_len: int = 0,
           shared_elem: Optional[ElemType] = None) -> float:
    """Execute `kernel` once per block of `cfg` and return the wall-clock
    duration in seconds.  The clock covers body execution only (argument
    validation happens before it starts); the call blocks until every
    block has completed and all writes are visible."""
    args = tuple(args)
    if not callable(kernel):
        raise InvalidArgumentError("kernel must be callable")
    if not _kernel_arity_ok(kernel, 1 + len(args)):
        raise InvalidArgumentError(
            f"kernel {getattr(kernel, '__name__', kernel)!r} cannot accept "
            f"{1 + len(args)} positional arguments")
    gx, gy, gz = cfg.grid_dim
    nblocks = cfg.grid_dim.volume
    bd, gd = cfg.block_dim, cfg.grid_dim
    sdtype = (shared_elem or ElemType.f64).dtype
    plane = gx * gy

    def run_span(lo: int, hi: int) -> None:
        for lin in range(lo, hi):
            bz, rem = divmod(lin, plane)
            by, bx = divmod(rem, gx)
            shared = np.zeros(shared_len, dtype=sdtype) if shared_len else None
            kernel(BlockContext(Dim3(bx, by, bz), bd, gd, shared), *args)

    if backend.kind is BackendKind.reference_sequential:
        t0 = time.perf_counter()
        run_span(0, nblocks)
        return time.perf_counter() - t0

    pool = _pool(backend.worker_count)
    nchunks = min(nblocks, backend.worker_count * 8)
    bounds = np.linspace(0, nblocks, nchunks + 1).astype(np.int64)
    t0 = time.perf_counter()
    futures = [pool.submit(run_span, int(lo), int(hi))
               for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    for fut in futures:
        fut.result()
    return time.perf_counter() - t0
