"""Dense linear algebra: products, factorizations, norms and seeded Gaussians.

Dense matrices are plain C-ordered ``float64`` numpy arrays. Row-partitioned
data is carried by :class:`PartitionedMatrix`, which stores the stacked array
once and hands out row-block views.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import _kernels
from .errors import ConvergenceError, NotPositiveDefiniteError, ValidationError
from .rng import as_source


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array; 1-D input becomes a column."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class PartitionedMatrix:
    """A matrix split into consecutive row blocks ``A_1, ..., A_J``."""

    data: np.ndarray
    block_rows: tuple

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        rows = tuple(int(n) for n in self.block_rows)
        if not rows or min(rows) < 1:
            raise ValidationError(f"block sizes must be positive, got {list(rows)}")
        if sum(rows) != data.shape[0]:
            raise ValidationError(
                f"block sizes {list(rows)} sum to {sum(rows)}, matrix has {data.shape[0]} rows"
            )
        object.__setattr__(self, "data", np.ascontiguousarray(data))
        object.__setattr__(self, "block_rows", rows)

    @classmethod
    def from_blocks(cls, blocks):
        blocks = [np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in blocks]
        cols = {b.shape[1] for b in blocks}
        if len(cols) != 1:
            raise ValidationError(f"blocks disagree on column count: {sorted(cols)}")
        return cls(np.vstack(blocks), tuple(b.shape[0] for b in blocks))

    @classmethod
    def split(cls, a, n_blocks):
        """Partition rows into ``n_blocks`` contiguous blocks of near-equal size."""
        a = np.asarray(a, dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        if not 1 <= n_blocks <= a.shape[0]:
            raise ValidationError(f"cannot split {a.shape[0]} rows into {n_blocks} blocks")
        base, extra = divmod(a.shape[0], n_blocks)
        return cls(a, tuple(base + (j < extra) for j in range(n_blocks)))

    @property
    def n_blocks(self):
        return len(self.block_rows)

    @property
    def total_rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def offsets(self):
        return np.concatenate(([0], np.cumsum(self.block_rows)))

    def block(self, j):
        off = self.offsets
        return self.data[off[j]:off[j + 1]]

    @property
    def blocks(self):
        off = self.offsets
        return [self.data[off[j]:off[j + 1]] for j in range(self.n_blocks)]

    def flatten(self):
        return self.data

    def with_data(self, data):
        """Same partition, different columns (e.g. ``b`` alongside ``A``)."""
        return PartitionedMatrix(data, self.block_rows)

    def permute_blocks(self, order):
        return PartitionedMatrix.from_blocks([self.block(j) for j in order])


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValidationError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def frobenius_norm(a):
    return float(np.linalg.norm(a))


def spectral_norm(a, tol=1e-10, max_iters=1000, fallback=True):
    """Largest singular value by power iteration on the Gram matrix.

    Iteration starts from the normalized all-ones vector and stops once the
    eigen-residual ``||G v - mu v||`` of the Gram matrix ``G`` drops below
    ``tol * mu``. If that never happens within ``max_iters`` the full singular
    values are used instead, or :class:`ConvergenceError` is raised when
    ``fallback`` is False.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if not np.any(a):
        return 0.0
    # Iterate on the smaller Gram matrix.
    op = a if a.shape[0] >= a.shape[1] else a.T
    v = np.full(op.shape[1], 1.0 / np.sqrt(op.shape[1]))
    gap = np.inf
    for _ in range(max_iters):
        w = op.T @ (op @ v)
        mu = float(v @ w)
        wn = np.linalg.norm(w)
        if wn == 0.0:
            break
        gap = float(np.linalg.norm(w - mu * v)) / mu
        if gap <= tol:
            return float(np.sqrt(mu))
        v = w / wn
    if not fallback:
        raise ConvergenceError("power iteration did not converge", gap)
    return float(np.linalg.svd(a, compute_uv=False)[0])


def qr_thin(a):
    """Householder thin QR with the diagonal of ``R`` made nonnegative."""
    a = as_matrix(a, "A")
    if a.shape[0] < a.shape[1]:
        raise ValidationError(f"qr_thin needs rows >= cols, got shape {a.shape}")
    q, r = _kernels.householder_qr(a)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return np.ascontiguousarray(q * signs), np.ascontiguousarray(r * signs[:, None])


def singular_values(a):
    a = as_matrix(a, "A")
    return np.linalg.svd(a, compute_uv=False)


def solve_spd(m, rhs, sym_tol=1e-10):
    """Solve ``M x = rhs`` for symmetric positive definite ``M`` via Cholesky."""
    m = as_matrix(m, "M")
    rhs_arr = np.asarray(rhs, dtype=np.float64)
    vector = rhs_arr.ndim == 1
    rhs2 = as_matrix(rhs_arr, "rhs")
    n = m.shape[0]
    if m.shape[1] != n or rhs2.shape[0] != n:
        raise ValidationError(f"cannot solve with M {m.shape} and rhs {rhs_arr.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > sym_tol * scale:
        raise ValidationError("M is not symmetric")
    low, bad = _kernels.cholesky(m)
    if bad >= 0:
        raise NotPositiveDefiniteError(int(bad))
    y = solve_triangular(low, rhs2, lower=True)
    x = solve_triangular(low.T, y, lower=False)
    return x[:, 0] if vector else x


def gaussian_matrix(rows, cols, variance, src):
    """i.i.d. ``N(0, variance)`` entries drawn from the stream ``src``."""
    if variance <= 0:
        raise ValidationError("variance must be positive")
    gen = as_source(src).generator()
    return gen.standard_normal((int(rows), int(cols))) * np.sqrt(variance)
