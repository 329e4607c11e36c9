"""Seven-point Laplacian stencil on a cubic structured grid.

The field is initialized to the quadratic u(x,y,z) = x^2 + y^2 + z^2 on the
unit cube so that the interior discrete Laplacian equals the constant 6.0 up
to rounding, which makes verification analytic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..exec_model import (Backend, Buffer, Dim3, ElemType, InvalidArgumentError,
                          LaunchConfig, create_buffer, launch)


@dataclass(frozen=True)
class StencilConfig:
    L: int                  # points per dimension
    h: float                # grid spacing, 1/(L-1)
    invhx2: float
    invhy2: float
    invhz2: float
    invhxyz2: float         # center coefficient, -2*(invhx2+invhy2+invhz2)
    elem_type: ElemType
    launch: LaunchConfig
    iterations: int


def make_stencil_config(L: int, elem_type: ElemType = ElemType.f64,
                        block_x: int | None = None,
                        iterations: int = 100) -> StencilConfig:
    if L < 3:
        raise InvalidArgumentError(f"stencil needs L >= 3, got {L}")
    h = 1.0 / (L - 1)
    inv = 1.0 / (h * h)
    block_x = block_x or min(L, 256)
    grid = LaunchConfig(grid_dim=Dim3(math.ceil(L / block_x), L, L),
                        block_dim=Dim3(block_x, 1, 1))
    return StencilConfig(L=L, h=h, invhx2=inv, invhy2=inv, invhz2=inv,
                         invhxyz2=-2.0 * (inv + inv + inv),
                         elem_type=elem_type, launch=grid,
                         iterations=iterations)


def stencil_init(cfg: StencilConfig) -> Buffer:
    """Allocate and fill u[i,j,k] = (i*h)^2 + (j*h)^2 + (k*h)^2, row-major
    with i slowest and k fastest."""
    L = cfg.L
    xs = (np.arange(L, dtype=np.float64) * cfg.h) ** 2
    u3 = xs[:, None, None] + xs[None, :, None] + xs[None, None, :]
    buf = create_buffer(L ** 3, cfg.elem_type, 0.0, name="u")
    buf.data[:] = u3.reshape(-1).astype(cfg.elem_type.dtype)
    return buf


def _check_geometry(cfg: StencilConfig) -> None:
    g, b = cfg.launch.grid_dim, cfg.launch.block_dim
    if (g.x * b.x < cfg.L or g.y != cfg.L or g.z != cfg.L
            or b.y != 1 or b.z != 1):
        raise InvalidArgumentError(
            f"launch {g}x{b} does not cover an L={cfg.L} cubic grid")


def _laplacian_block(ctx, fb, ub, L, invx, invy, invz):
    # i from block z, j from block y, k spans this block along x.
    i = ctx.block_idx.z
    j = ctx.block_idx.y
    if not (0 < i < L - 1 and 0 < j < L - 1):
        return
    lo = ctx.block_idx.x * ctx.block_dim.x
    k0 = max(lo, 1)
    k1 = min(lo + ctx.block_dim.x, L - 1)
    if k0 >= k1:
        return
    u = ub.data
    base = (i * L + j) * L
    LL = L * L
    c = u[base + k0:base + k1]
    # Second differences per axis: exact cancellation of the large center
    # term before scaling by 1/h^2 keeps f32 round-off at its floor.
    dx = (u[base - LL + k0:base - LL + k1] - c) + (u[base + LL + k0:base + LL + k1] - c)
    dy = (u[base - L + k0:base - L + k1] - c) + (u[base + L + k0:base + L + k1] - c)
    dz = (u[base + k0 - 1:base + k1 - 1] - c) + (u[base + k0 + 1:base + k1 + 1] - c)
    fb.data[base + k0:base + k1] = dx * invx + dy * invy + dz * invz


def laplacian_kernel(f: Buffer, u: Buffer, cfg: StencilConfig,
                     backend: Backend) -> float:
    """Apply the seven-point stencil to every interior point of `u`, writing
    into `f` (boundary entries untouched).  Returns the launch duration."""
    _check_geometry(cfg)
    n = cfg.L ** 3
    if len(f) != n or len(u) != n:
        raise InvalidArgumentError(
            f"buffers must have L^3={n} elements, got f={len(f)}, u={len(u)}")
    dt = cfg.elem_type.dtype
    return launch(_laplacian_block, cfg.launch, backend,
                  args=(f, u, cfg.L, dt(cfg.invhx2), dt(cfg.invhy2), dt(cfg.invhz2)))


def stencil_verify(f: Buffer, cfg: StencilConfig) -> float:
    """Max absolute interior deviation of `f` from the analytic value 6.0."""
    L = cfg.L
    arr = f.data.reshape(L, L, L)[1:-1, 1:-1, 1:-1].astype(np.float64)
    return float(np.abs(arr - 6.0).max())
