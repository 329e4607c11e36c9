"""Two-electron Fock-matrix build over contracted s-type Gaussians.

One thread per symmetry-unique quadruplet (i>=j, k>=l, ij>=kl); each thread
screens with the Schwarz bound, evaluates the contracted (ss|ss) repulsion
integral and applies six atomic updates to the Fock matrix.  The sequential
reference path uses the identical enumeration with plain additions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from ..exec_model import (Backend, Buffer, Dim3, ElemType, InvalidArgumentError,
                          LaunchConfig, atomic_add_many, create_buffer, launch)

# STO-3G helium primitives (exponent, contraction) used when ngauss == 3.
STO3G_HE_XPNT = np.array([6.36242139, 1.158923, 0.31364979])
STO3G_HE_COEF = np.array([0.15432897, 0.53532814, 0.44463454])

_TWO_PI_2_5 = 2.0 * math.pi ** 2.5
_BOYS_SERIES_CUT = 1e-12


@dataclass
class HfSystem:
    natoms: int
    ngauss: int
    xpnt: np.ndarray          # (ngauss,) exponents, > 0
    coef: np.ndarray          # (ngauss,) coefficients, normalized at load
    geom: np.ndarray          # (natoms, 3)
    dens: np.ndarray          # (natoms, natoms) symmetric density
    schwarz: np.ndarray = field(default=None)  # (nn,) screening bounds
    dtol: float = 1e-10

    @property
    def nn(self) -> int:
        return self.natoms * (self.natoms + 1) // 2

    @property
    def nnnn(self) -> int:
        return self.nn * (self.nn + 1) // 2


def boys_f0(t):
    """Boys function F0(T) = integral_0^1 exp(-T u^2) du for T >= 0.
    Uses the erf closed form above 1e-12 and a 4-term Maclaurin series
    below; accepts scalars or arrays."""
    arr = np.asarray(t, dtype=np.float64)
    if (arr < 0).any():
        raise InvalidArgumentError("Boys argument must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = 0.5 * np.sqrt(np.pi / arr) * erf(np.sqrt(arr))
    series = 1.0 - arr / 3.0 + arr * arr / 10.0 - arr ** 3 / 42.0
    out = np.where(arr < _BOYS_SERIES_CUT, series, closed)
    if isinstance(t, np.ndarray) and t.ndim:
        return out
    return float(out)


@dataclass(frozen=True)
class EriIntermediates:
    """Per-primitive-quadruplet quantities of the (ss|ss) integral: pair
    exponent sums p/q, Gaussian product centers P/Q, the reduced Boys
    argument T and its value f0.  Fields may be scalars or arrays."""

    p: float
    q: float
    P: np.ndarray
    Q: np.ndarray
    T: np.ndarray
    f0: np.ndarray


def primitive_intermediates(xa, xb, xc, xd, A, B, C, D) -> EriIntermediates:
    """Gaussian-product quantities for primitives (xa, xb | xc, xd) over
    center arrays of shape (n, 3)."""
    p = xa + xb
    q = xc + xd
    P = (xa * A + xb * B) / p
    Q = (xc * C + xd * D) / q
    pq = P - Q
    T = (p * q / (p + q)) * (pq * pq).sum(axis=-1)
    return EriIntermediates(p=p, q=q, P=P, Q=Q, T=T, f0=boys_f0(T))


def _tri_scalar(m: int) -> tuple[int, int]:
    # Float sqrt candidate, then exact integer correction.
    t = int((math.sqrt(8.0 * m + 1.0) - 1.0) / 2.0)
    while t * (t + 1) // 2 > m:
        t -= 1
    while (t + 1) * (t + 2) // 2 <= m:
        t += 1
    return t, m - t * (t + 1) // 2


def _tri_invert(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=np.int64)
    t = ((np.sqrt(8.0 * m + 1.0) - 1.0) / 2.0).astype(np.int64)
    while True:
        over = t * (t + 1) // 2 > m
        if not over.any():
            break
        t = t - over
    while True:
        under = (t + 1) * (t + 2) // 2 <= m
        if not under.any():
            break
        t = t + under
    return t, m - t * (t + 1) // 2


def decompose_ijkl(m: int, natoms: int) -> tuple[int, int, int, int]:
    """Invert the (i>=j, k>=l, ij>=kl) quadruplet enumeration."""
    nn = natoms * (natoms + 1) // 2
    nnnn = nn * (nn + 1) // 2
    if not 0 <= m < nnnn:
        raise InvalidArgumentError(
            f"quadruplet index {m} out of range [0, {nnnn}) for natoms={natoms}")
    ij, kl = _tri_scalar(m)
    i, j = _tri_scalar(ij)
    k, l = _tri_scalar(kl)
    return i, j, k, l


def eri_batch(sys: HfSystem, i, j, k, l) -> np.ndarray:
    """Contracted (ss|ss) integrals for index arrays (no bound checks)."""
    xp, cf, g = sys.xpnt, sys.coef, sys.geom
    ng = sys.ngauss
    A, B, C, D = g[i], g[j], g[k], g[l]
    ab = A - B
    cd = C - D
    rab2 = (ab * ab).sum(axis=1)
    rcd2 = (cd * cd).sum(axis=1)
    # Bra/ket pair exponentials do not depend on the opposite pair; hoist.
    eab = [[np.exp((-xp[a] * xp[b] / (xp[a] + xp[b])) * rab2)
            for b in range(ng)] for a in range(ng)]
    ecd = [[np.exp((-xp[c] * xp[d] / (xp[c] + xp[d])) * rcd2)
            for d in range(ng)] for c in range(ng)]
    out = np.zeros(len(rab2))
    for a in range(ng):
        for b in range(ng):
            cab = cf[a] * cf[b]
            for c in range(ng):
                for d in range(ng):
                    mid = primitive_intermediates(xp[a], xp[b], xp[c], xp[d],
                                                  A, B, C, D)
                    pref = cab * cf[c] * cf[d] * _TWO_PI_2_5 \
                        / (mid.p * mid.q * math.sqrt(mid.p + mid.q))
                    out += pref * (eab[a][b] * ecd[c][d] * mid.f0)
    return out


def eri(i: int, j: int, k: int, l: int, sys: HfSystem) -> float:
    """Single contracted (ss|ss) electron-repulsion integral."""
    for idx in (i, j, k, l):
        if not 0 <= idx < sys.natoms:
            raise InvalidArgumentError(
                f"atom index {idx} out of range [0, {sys.natoms})")
    return float(eri_batch(sys, np.array([i]), np.array([j]),
                           np.array([k]), np.array([l]))[0])


def hf_schwarz(sys: HfSystem) -> np.ndarray:
    """Screening bounds sqrt((ij|ij)) for all pairs i >= j, indexed by
    ij = i*(i+1)/2 + j."""
    pi, pj = _tri_invert(np.arange(sys.nn))
    return np.sqrt(eri_batch(sys, pi, pj, pi, pj))


def _lattice(natoms: int, spacing: float) -> np.ndarray:
    side = 1
    while side ** 3 < natoms:
        side += 1
    idx = np.arange(natoms)
    geom = np.stack([idx % side, (idx // side) % side, idx // (side * side)],
                    axis=1).astype(np.float64)
    return geom * spacing


def _finish_system(natoms, ngauss, xpnt, coef_raw, geom, dtol) -> HfSystem:
    xpnt = np.asarray(xpnt, dtype=np.float64)
    coef = np.asarray(coef_raw, dtype=np.float64).copy()
    if xpnt.shape != (ngauss,) or coef.shape != (ngauss,):
        raise InvalidArgumentError("need exactly ngauss exponents and coefficients")
    if (xpnt <= 0).any():
        raise InvalidArgumentError("exponents must be positive")
    coef *= (2.0 * xpnt / np.pi) ** 0.75
    dens = np.full((natoms, natoms), 0.1) + 0.9 * np.eye(natoms)
    sys = HfSystem(natoms=natoms, ngauss=ngauss, xpnt=xpnt, coef=coef,
                   geom=np.asarray(geom, dtype=np.float64), dens=dens,
                   dtol=dtol)
    sys.schwarz = hf_schwarz(sys)
    return sys


def hf_gen_system(natoms: int, ngauss: int = 3, spacing: float = 2.0,
                  xpnt=None, coef=None, dtol: float = 1e-10) -> HfSystem:
    """Helium-like atoms on a cubic lattice (x varying fastest).  ngauss=3
    uses built-in STO-3G helium primitives; other values require explicit
    `xpnt`/`coef`."""
    if natoms < 1:
        raise InvalidArgumentError("natoms must be >= 1")
    if not 1 <= ngauss <= 6:
        raise InvalidArgumentError("ngauss must lie in 1..6")
    if xpnt is None or coef is None:
        if ngauss != 3:
            raise InvalidArgumentError(
                f"no built-in primitives for ngauss={ngauss}; pass xpnt and coef")
        xpnt, coef = STO3G_HE_XPNT, STO3G_HE_COEF
    return _finish_system(natoms, ngauss, xpnt, coef,
                          _lattice(natoms, spacing), dtol)


def load_hf_system(path, dtol: float = 1e-10) -> HfSystem:
    """Read the plain-text system format: line 1 `natoms ngauss`, then
    ngauss `exponent coefficient` lines, then natoms `x y z` lines."""
    with open(path) as fh:
        tokens = fh.read().split()
    try:
        natoms, ngauss = int(tokens[0]), int(tokens[1])
        vals = [float(v) for v in tokens[2:]]
    except (ValueError, IndexError) as exc:
        raise InvalidArgumentError(f"malformed system file {path}: {exc}") from exc
    need = 2 * ngauss + 3 * natoms
    if len(vals) != need:
        raise InvalidArgumentError(
            f"system file {path}: expected {need} values after the header, "
            f"got {len(vals)}")
    prim = np.array(vals[:2 * ngauss]).reshape(ngauss, 2)
    geom = np.array(vals[2 * ngauss:]).reshape(natoms, 3)
    if natoms < 1 or not 1 <= ngauss <= 6:
        raise InvalidArgumentError(f"system file {path}: bad sizes")
    return _finish_system(natoms, ngauss, prim[:, 0], prim[:, 1], geom, dtol)


def write_hf_input(path, xpnt, coef_raw, geom) -> None:
    """Write the plain-text system format (coefficients unnormalized)."""
    geom = np.asarray(geom, dtype=np.float64).reshape(-1, 3)
    xpnt = np.asarray(xpnt, dtype=np.float64)
    coef_raw = np.asarray(coef_raw, dtype=np.float64)
    lines = [f"{len(geom)} {len(xpnt)}"]
    lines += [f"{x:.17g} {c:.17g}" for x, c in zip(xpnt, coef_raw)]
    lines += [f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}" for p in geom]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _updates(sys: HfSystem, m: np.ndarray):
    """Decompose, screen and evaluate a batch of quadruplet indices; returns
    flat Fock indices and signed update values (or None if all screened)."""
    ij, kl = _tri_invert(m)
    keep = sys.schwarz[ij] * sys.schwarz[kl] >= sys.dtol
    if not keep.any():
        return None
    ij, kl = ij[keep], kl[keep]
    i, j = _tri_invert(ij)
    k, l = _tri_invert(kl)
    e = eri_batch(sys, i, j, k, l)
    e = np.where(i == j, 0.5, 1.0) * e
    e = np.where(k == l, 0.5, 1.0) * e
    e = np.where(ij == kl, 0.5, 1.0) * e
    na = sys.natoms
    d = sys.dens.reshape(-1)
    idx = np.concatenate([i * na + j, k * na + l, i * na + k,
                          i * na + l, j * na + k, j * na + l])
    val = np.concatenate([d[k * na + l] * e * 4.0, d[i * na + j] * e * 4.0,
                          -(d[j * na + l] * e), -(d[j * na + k] * e),
                          -(d[i * na + l] * e), -(d[i * na + k] * e)])
    return idx, val


def _fock_block(ctx, fock, sys, nnnn):
    start = ctx.block_idx.x * ctx.block_dim.x
    if start >= nnnn:
        return
    m = np.arange(start, min(start + ctx.block_dim.x, nnnn))
    upd = _updates(sys, m)
    if upd is not None:
        atomic_add_many(fock, upd[0], upd[1])


def hf_kernel(sys: HfSystem, backend: Backend,
              tbsize: int = 256) -> tuple[Buffer, float]:
    """Build the two-electron Fock matrix with one thread per unique
    quadruplet and atomic accumulation.  Returns (fock buffer of natoms^2
    doubles, launch duration)."""
    if tbsize < 1:
        raise InvalidArgumentError("tbsize must be >= 1")
    if sys.schwarz is None or len(sys.schwarz) != sys.nn:
        raise InvalidArgumentError("system is missing its schwarz bounds")
    fock = create_buffer(sys.natoms ** 2, ElemType.f64, 0.0, name="fock")
    lc = LaunchConfig(grid_dim=Dim3(math.ceil(sys.nnnn / tbsize)),
                      block_dim=Dim3(tbsize))
    duration = launch(_fock_block, lc, backend, args=(fock, sys, sys.nnnn))
    return fock, duration


def hf_reference(sys: HfSystem, chunk: int = 65536) -> np.ndarray:
    """Sequential Fock build: identical quadruplet enumeration, plain
    (non-atomic) additions.  Deterministic across runs."""
    fock = np.zeros(sys.natoms ** 2)
    for start in range(0, sys.nnnn, chunk):
        m = np.arange(start, min(start + chunk, sys.nnnn))
        upd = _updates(sys, m)
        if upd is not None:
            np.add.at(fock, upd[0], upd[1])
    return fock


def hf_symmetrize(fock, natoms: int) -> np.ndarray:
    """Copy the lower-triangle-updated entries onto the upper triangle;
    returns the (natoms, natoms) view of the same storage."""
    M = np.asarray(fock).reshape(natoms, natoms)
    il, jl = np.tril_indices(natoms)
    M[jl, il] = M[il, jl]
    return M
