"""Sketch operators and their application.

Three kinds are supported:

* ``BlockDiagonalGaussian``: ``S = diag(S_1, ..., S_J)`` with ``S_j`` of shape
  ``M_j x N_j`` and i.i.d. ``N(0, 1/M_j)`` entries. Block ``j`` is drawn from
  ``seed.substream(j)``, so blocks do not depend on each other's draws.
* ``DenseGaussian``: an ``m x n`` matrix with ``N(0, 1/m)`` entries.
* ``SubsampledFourier``: ``x -> sqrt(n/m) P F D x`` with ``D`` random signs,
  ``F`` the orthonormal DCT-II and ``P`` a uniform choice of ``m`` rows
  without replacement.

All three satisfy ``E[S^T S] = I``. Operators never need to be stored densely
except the dense Gaussian itself; :func:`materialize` exists for testing.
"""
from dataclasses import dataclass

import numpy as np
from scipy import fft

from . import _kernels
from .errors import ValidationError
from .linalg import PartitionedMatrix, gaussian_matrix
from .measures import BlockAllocation
from .rng import RandomSource, as_source

BLOCK = "BlockDiagonalGaussian"
DENSE = "DenseGaussian"
FOURIER = "SubsampledFourier"
KINDS = (BLOCK, DENSE, FOURIER)


@dataclass(frozen=True, eq=False)
class SketchOperator:
    kind: str
    n_rows: int
    n_cols: int
    seed: object = None
    allocation: object = None
    block_rows: tuple = None
    # BLOCK: (flat entries, entry offsets, M_j, N_j); DENSE: matrix;
    # FOURIER: (selected rows, signs)
    payload: object = None

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def block(self, j):
        """Dense ``S_j`` (block-diagonal operators only)."""
        flat, off, ms, ns = self.payload
        return flat[off[j]:off[j] + ms[j] * ns[j]].reshape(ms[j], ns[j])

    def to_descriptor(self):
        if self.seed is None:
            raise ValidationError("operator built from explicit blocks has no seed descriptor")
        desc = {"kind": self.kind, "seed": self.seed.to_dict(), "m": self.n_rows, "n": self.n_cols}
        if self.kind == BLOCK:
            desc["allocation"] = self.allocation.to_dict()
            desc["block_rows"] = list(self.block_rows)
        return desc


def from_descriptor(desc):
    kind = desc["kind"]
    seed = RandomSource.from_dict(desc["seed"])
    if kind == BLOCK:
        return build_block_diagonal(
            BlockAllocation.from_dict(desc["allocation"]), desc["block_rows"], seed
        )
    if kind == DENSE:
        return build_dense_gaussian(desc["m"], desc["n"], seed)
    if kind == FOURIER:
        return build_subsampled_fourier(desc["m"], desc["n"], seed)
    raise ValidationError(f"unknown sketch kind {kind!r}")


def _pack_blocks(blocks):
    ms = np.array([b.shape[0] for b in blocks], dtype=np.int64)
    ns = np.array([b.shape[1] for b in blocks], dtype=np.int64)
    off = np.concatenate(([0], np.cumsum(ms * ns)[:-1])).astype(np.int64)
    flat = np.concatenate([np.ascontiguousarray(b, dtype=np.float64).ravel() for b in blocks])
    return flat, off, ms, ns


def build_block_diagonal(alloc, block_rows, seed):
    if not isinstance(alloc, BlockAllocation):
        alloc = BlockAllocation(int(sum(alloc)), tuple(alloc))
    block_rows = tuple(int(n) for n in block_rows)
    if len(alloc.block_sizes) != len(block_rows):
        raise ValidationError(
            f"allocation has {len(alloc.block_sizes)} blocks, partition has {len(block_rows)}"
        )
    if min(block_rows) < 1:
        raise ValidationError("every block needs at least one data row")
    seed = as_source(seed)
    blocks = [
        gaussian_matrix(mj, nj, 1.0 / mj, seed.substream(j))
        for j, (mj, nj) in enumerate(zip(alloc.block_sizes, block_rows))
    ]
    return SketchOperator(
        BLOCK, alloc.total, sum(block_rows), seed, alloc, block_rows, _pack_blocks(blocks)
    )


def from_blocks(blocks):
    """Block-diagonal operator with explicitly given blocks (no seed)."""
    blocks = [np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in blocks]
    alloc = BlockAllocation(sum(b.shape[0] for b in blocks), tuple(b.shape[0] for b in blocks))
    block_rows = tuple(b.shape[1] for b in blocks)
    return SketchOperator(
        BLOCK, alloc.total, sum(block_rows), None, alloc, block_rows, _pack_blocks(blocks)
    )


def identity_blocks(block_rows):
    """The exact "sketch" ``S = I`` expressed as a block-diagonal operator."""
    return from_blocks([np.eye(int(n)) for n in block_rows])


def build_dense_gaussian(m, n, seed):
    if m < 1 or n < 1:
        raise ValidationError(f"dense sketch needs m, n >= 1, got ({m}, {n})")
    seed = as_source(seed)
    return SketchOperator(DENSE, int(m), int(n), seed, payload=gaussian_matrix(m, n, 1.0 / m, seed))


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def build_subsampled_fourier(m, n, seed):
    m, n = int(m), int(n)
    if not _is_pow2(n):
        raise ValidationError(f"n must be a power of two, got {n}")
    if not 1 <= m <= n:
        raise ValidationError(f"need 1 <= m <= n, got m={m}, n={n}")
    seed = as_source(seed)
    gen = seed.generator()
    signs = gen.choice(np.array([-1.0, 1.0]), size=n)
    rows = np.sort(gen.choice(n, size=m, replace=False))
    return SketchOperator(FOURIER, m, n, seed, payload=(rows, signs))


def _fourier_apply(x, rows, signs):
    n = x.shape[0]
    y = fft.dct(signs[:, None] * x, type=2, norm="ortho", axis=0)
    return np.sqrt(n / rows.shape[0]) * y[rows]


def _fourier_adjoint(y, rows, signs, n):
    z = np.zeros((n, y.shape[1]))
    z[rows] = np.sqrt(n / rows.shape[0]) * y
    return signs[:, None] * fft.idct(z, type=2, norm="ortho", axis=0)


def subsampled_transform_rows(x, m, gen):
    """One-off ``sqrt(n/m) P F D x`` for any row count (used by the estimator)."""
    n = x.shape[0]
    signs = gen.choice(np.array([-1.0, 1.0]), size=n)
    rows = np.sort(gen.choice(n, size=min(m, n), replace=False))
    return _fourier_apply(x, rows, signs)


def _data_of(s, x):
    if isinstance(x, PartitionedMatrix):
        if s.kind == BLOCK and x.block_rows != s.block_rows:
            raise ValidationError(
                f"partition mismatch: operator blocks {list(s.block_rows)}, "
                f"data blocks {list(x.block_rows)}"
            )
        data = x.data
    else:
        data = np.asarray(x, dtype=np.float64)
    squeeze = data.ndim == 1
    if squeeze:
        data = data[:, None]
    if data.shape[0] != s.n_cols:
        raise ValidationError(
            f"operator has {s.n_cols} columns, data has {data.shape[0]} rows"
            + (f" (operator blocks {list(s.block_rows)})" if s.block_rows else "")
        )
    return np.ascontiguousarray(data), squeeze


def apply(s, x):
    """``S X``; block operators cost ``sum_j M_j N_j d`` and never form ``S``."""
    data, squeeze = _data_of(s, x)
    if s.kind == BLOCK:
        flat, off, ms, ns = s.payload
        out = _kernels.block_apply(flat, off, ms, ns, data)
    elif s.kind == DENSE:
        out = s.payload @ data
    elif s.kind == FOURIER:
        rows, signs = s.payload
        out = _fourier_apply(data, rows, signs)
    else:
        raise ValidationError(f"unknown sketch kind {s.kind!r}")
    return out[:, 0] if squeeze else out


def adjoint_apply(s, y):
    """``S^T Y``."""
    y = np.asarray(y, dtype=np.float64)
    squeeze = y.ndim == 1
    if squeeze:
        y = y[:, None]
    if y.shape[0] != s.n_rows:
        raise ValidationError(f"operator has {s.n_rows} rows, input has {y.shape[0]}")
    if s.kind == BLOCK:
        out = np.empty((s.n_cols, y.shape[1]))
        r = c = 0
        for j, (mj, nj) in enumerate(zip(s.allocation.block_sizes, s.block_rows)):
            out[c:c + nj] = s.block(j).T @ y[r:r + mj]
            r += mj
            c += nj
    elif s.kind == DENSE:
        out = s.payload.T @ y
    else:
        rows, signs = s.payload
        out = _fourier_adjoint(y, rows, signs, s.n_cols)
    return out[:, 0] if squeeze else out


def materialize(s):
    """Dense form of ``S``. Test and debugging use only."""
    if s.kind == DENSE:
        return s.payload.copy()
    if s.kind == FOURIER:
        return apply(s, np.eye(s.n_cols))
    dense = np.zeros(s.shape)
    r = c = 0
    for j, (mj, nj) in enumerate(zip(s.allocation.block_sizes, s.block_rows)):
        dense[r:r + mj, c:c + nj] = s.block(j)
        r += mj
        c += nj
    return dense
