"""Molecular-docking energy kernel (poses-per-work-item structure).

Each thread evaluates ``ppwi`` poses, strided by the work-group size within
its block's span of ``wg * ppwi`` poses.  The pairwise energy is a fully
specified surrogate term: with squared distance r2 and class-scale product
s, e = s*(2 - r2) inside the unit cutoff and s/r2 outside (continuous at
r2 = 1).  All arithmetic is binary32 and the accumulation order (protein
innermost, ligand outer) matches :func:`fasten_reference` bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..exec_model import (Backend, Buffer, Dim3, ElemType, InvalidArgumentError,
                          LaunchConfig, create_buffer, launch)

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First `n` outputs of the 64-bit split-mix generator seeded by `seed`."""
    z = np.uint64(seed & _MASK64) + np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _uniform(seed: int, n: int, lo: float, hi: float) -> np.ndarray:
    u = (splitmix64(seed, n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return lo + (hi - lo) * u


@dataclass
class BudeDeck:
    """Synthetic docking deck.  Atom records are stored as flattened
    4-float32 runs [x, y, z, class] per atom."""

    natlig: int
    natpro: int
    nposes: int
    ligand: np.ndarray            # (natlig*4,) f32
    protein: np.ndarray           # (natpro*4,) f32
    fs: np.ndarray                # (64,) f32 class-scale table
    poses: tuple[np.ndarray, ...]  # rx, ry, rz, tx, ty, tz, each (nposes,) f32
    ppwi: int
    wg: int

    def validate(self) -> None:
        if min(self.natlig, self.natpro, self.nposes, self.ppwi, self.wg) < 1:
            raise InvalidArgumentError("deck counts must all be >= 1")
        if self.nposes % self.ppwi:
            raise InvalidArgumentError(
                f"nposes={self.nposes} not divisible by ppwi={self.ppwi}")
        if len(self.poses) != 6 or any(len(p) != self.nposes for p in self.poses):
            raise InvalidArgumentError("poses must be 6 arrays of length nposes")
        for arr, nat, label in ((self.ligand, self.natlig, "ligand"),
                                (self.protein, self.natpro, "protein")):
            if arr.shape != (nat * 4,):
                raise InvalidArgumentError(f"{label} array must be flat 4*natoms")
            cls = arr.reshape(-1, 4)[:, 3]
            if ((cls < 0) | (cls >= 64)).any():
                raise InvalidArgumentError(f"{label} classes must lie in [0, 64)")
        if (self.fs <= 0).any():
            raise InvalidArgumentError("fs entries must be positive")


def _atom_records(seed: int, natoms: int, half_extent: float,
                  cls: np.ndarray) -> np.ndarray:
    coords = _uniform(seed, 3 * natoms, -half_extent, half_extent)
    rec = np.empty((natoms, 4), dtype=np.float32)
    rec[:, :3] = coords.reshape(natoms, 3)
    rec[:, 3] = cls
    return rec.reshape(-1)


def bude_gen_deck(seed: int, natlig: int = 26, natpro: int = 938,
                  nposes: int = 65536, ppwi: int = 4, wg: int = 64) -> BudeDeck:
    """Deterministic deck built from split-mix streams (sub-seeds
    seed^1/seed^2/seed^3 for poses/ligand/protein)."""
    draws = _uniform(seed ^ 1, 6 * nposes, 0.0, 1.0).reshape(6, nposes)
    angles = (-math.pi + 2.0 * math.pi * draws[:3]).astype(np.float32)
    shifts = (-5.0 + 10.0 * draws[3:]).astype(np.float32)
    deck = BudeDeck(
        natlig=natlig, natpro=natpro, nposes=nposes,
        ligand=_atom_records(seed ^ 2, natlig, 2.0,
                             np.arange(natlig) % 64),
        protein=_atom_records(seed ^ 3, natpro, 10.0,
                              (3 * np.arange(natpro) + 1) % 64),
        fs=(0.1 * (1 + np.arange(64) % 8)).astype(np.float32),
        poses=tuple(angles) + tuple(shifts),
        ppwi=ppwi, wg=wg)
    deck.validate()
    return deck


def _transform_components(rx, ry, rz, tx, ty, tz):
    """Twelve row-major components of the 3x4 rigid transform, elementwise
    over arrays of pose parameters (binary32 in, binary32 out)."""
    sx, cx = np.sin(rx), np.cos(rx)
    sy, cy = np.sin(ry), np.cos(ry)
    sz, cz = np.sin(rz), np.cos(rz)
    return (cy * cz, sx * sy * cz - cx * sz, cx * sy * cz + sx * sz, tx,
            cy * sz, sx * sy * sz + cx * cz, cx * sy * sz - sx * cz, ty,
            -sy, sx * cy, cx * cy, tz)


def bude_transform(rx, ry, rz, tx, ty, tz) -> np.ndarray:
    """3x4 pose transform (rotation rows plus translation column)."""
    comp = _transform_components(*(np.float32(v) for v in (rx, ry, rz, tx, ty, tz)))
    return np.array(comp, dtype=np.float32).reshape(3, 4)


def _protein_columns(deck: BudeDeck):
    pro = deck.protein.reshape(-1, 4)
    qx = np.ascontiguousarray(pro[:, 0])
    qy = np.ascontiguousarray(pro[:, 1])
    qz = np.ascontiguousarray(pro[:, 2])
    qs = deck.fs[pro[:, 3].astype(np.int64)]
    return qx, qy, qz, qs


def _fasten_block(ctx, rx, ry, rz, tx, ty, tz, ligand, protein, fs,
                  etotals, nposes, ppwi):
    wg = ctx.block_dim.x
    tid = np.arange(wg)
    ix0 = ctx.block_idx.x * wg * ppwi + tid
    ix = np.where(ix0 >= nposes, nposes - ppwi, ix0)
    lanes = np.arange(ppwi) * wg
    pose = ix[:, None] + lanes[None, :]                       # (wg, ppwi)
    comp = _transform_components(rx[pose], ry[pose], rz[pose],
                                 tx[pose], ty[pose], tz[pose])
    pro = protein.reshape(-1, 4)
    qx = np.ascontiguousarray(pro[:, 0])
    qy = np.ascontiguousarray(pro[:, 1])
    qz = np.ascontiguousarray(pro[:, 2])
    qs = fs[pro[:, 3].astype(np.int64)]
    etot = np.zeros((wg, ppwi), dtype=np.float32)
    two = np.float32(2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        for lrec in ligand.reshape(-1, 4):
            lx, ly, lz = lrec[0], lrec[1], lrec[2]
            ls = fs[int(lrec[3])]
            px = comp[3] + lx * comp[0] + ly * comp[1] + lz * comp[2]
            py = comp[7] + lx * comp[4] + ly * comp[5] + lz * comp[6]
            pz = comp[11] + lx * comp[8] + ly * comp[9] + lz * comp[10]
            dx = px[:, :, None] - qx
            dy = py[:, :, None] - qy
            dz = pz[:, :, None] - qz
            r2 = (dx * dx + dy * dy) + dz * dz
            sv = ls * qs
            e = np.where(r2 < 1.0, sv * (two - r2), sv / r2)
            # Sequential protein accumulation with etot as the running head.
            chain = np.concatenate([etot[:, :, None], e], axis=2)
            etot = np.add.accumulate(chain, axis=2)[:, :, -1]
    write = ix0 < nposes
    tgt = ix0[:, None] + lanes[None, :]
    etotals.data[tgt[write]] = (etot * np.float32(0.5))[write]


def fasten_kernel(deck: BudeDeck, backend: Backend) -> tuple[Buffer, float]:
    """Evaluate every pose's total energy under the SPMD launch model.
    Returns the per-pose energies (times 0.5, as written by the kernel) and
    the launch duration."""
    deck.validate()
    per_block = deck.wg * deck.ppwi
    blocks = math.ceil(deck.nposes / per_block)
    slots = blocks * per_block
    # Clamped threads read poses at (nposes - ppwi) + lane*wg, which can
    # reach past both nposes and the block span; pad the parameter arrays
    # (values replicate modulo nposes) so every reachable slot is in range.
    reach = max(slots, deck.nposes - deck.ppwi + (deck.ppwi - 1) * deck.wg + 1)
    poses = deck.poses
    if reach > deck.nposes:
        pad = np.arange(deck.nposes, reach) % deck.nposes
        poses = tuple(np.concatenate([p, p[pad]]) for p in poses)
    etotals = create_buffer(slots, ElemType.f32, 0.0, name="etotals")
    lc = LaunchConfig(grid_dim=Dim3(blocks), block_dim=Dim3(deck.wg))
    duration = launch(_fasten_block, lc, backend,
                      args=(*poses, deck.ligand, deck.protein, deck.fs,
                            etotals, deck.nposes, deck.ppwi))
    out = create_buffer(deck.nposes, ElemType.f32, 0.0, name="etotals")
    out.data[:] = etotals.data[:deck.nposes]
    return out, duration


def fasten_reference(deck: BudeDeck) -> np.ndarray:
    """Scalar-order oracle: plain per-pose evaluation with no launch
    geometry.  Output is independent of ppwi and wg."""
    deck.validate()
    rx, ry, rz, tx, ty, tz = deck.poses
    comp = _transform_components(rx, ry, rz, tx, ty, tz)
    qx, qy, qz, qs = _protein_columns(deck)
    etot = np.zeros(deck.nposes, dtype=np.float32)
    two = np.float32(2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        for lrec in deck.ligand.reshape(-1, 4):
            lx, ly, lz = lrec[0], lrec[1], lrec[2]
            ls = deck.fs[int(lrec[3])]
            px = comp[3] + lx * comp[0] + ly * comp[1] + lz * comp[2]
            py = comp[7] + lx * comp[4] + ly * comp[5] + lz * comp[6]
            pz = comp[11] + lx * comp[8] + ly * comp[9] + lz * comp[10]
            dx = px[:, None] - qx
            dy = py[:, None] - qy
            dz = pz[:, None] - qz
            r2 = (dx * dx + dy * dy) + dz * dz
            sv = ls * qs
            e = np.where(r2 < 1.0, sv * (two - r2), sv / r2)
            chain = np.concatenate([etot[:, None], e], axis=1)
            etot = np.add.accumulate(chain, axis=1)[:, -1]
    return etot * np.float32(0.5)
