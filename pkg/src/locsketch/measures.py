"""Complexity measures: stable rank, statistical dimension, block coherence.

Block coherence drives how many sketch rows each data block receives::

    gamma_j = min(N_j * max|U_j|^2, ||U_j||_2^2)
    M_j     = max(1, ceil(m0 * gamma_j))

where ``U`` is an orthonormal basis of the data's column space split with the
same row blocks as the data.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import PartitionedMatrix, as_matrix, spectral_norm

ORTHO_TOL = 1e-8
GAMMA_NORM_TOL = 1e-8


@dataclass(frozen=True)
class CoherenceProfile:
    gammas: tuple
    block_rows: tuple
    basis_cols: int

    @property
    def n_blocks(self):
        return len(self.gammas)

    def to_dict(self):
        return {
            "gammas": list(self.gammas),
            "block_rows": list(self.block_rows),
            "basis_cols": self.basis_cols,
        }


@dataclass(frozen=True)
class BlockAllocation:
    m0: int
    block_sizes: tuple
    total: int = field(init=False)

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.block_sizes)
        if not sizes or min(sizes) < 1:
            raise ValidationError(f"every block needs at least one row, got {list(sizes)}")
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "total", sum(sizes))

    def to_dict(self):
        return {"m0": self.m0, "block_sizes": list(self.block_sizes), "total": self.total}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["m0"]), tuple(d["block_sizes"]))


def profile_json(profile, alloc=None):
    """``{"gammas", "block_rows", "m0", "block_sizes"}`` as a JSON string."""
    out = profile.to_dict()
    if alloc is not None:
        out["m0"] = alloc.m0
        out["block_sizes"] = list(alloc.block_sizes)
    return json.dumps(out)


def stable_rank(w):
    w = as_matrix(w, "W")
    spec = spectral_norm(w)
    if spec == 0.0:
        raise ValidationError("stable rank undefined for zero matrix")
    return float(np.sum(w * w)) / spec**2


def statistical_dimension(a, lam, sigma=None):
    """``sum_i s_i^2 / (s_i^2 + lam)`` over the singular values of ``a``.

    Pass ``sigma`` to evaluate on a known spectrum without factorizing.
    """
    if lam < 0:
        raise ValidationError(f"lambda must be nonnegative, got {lam}")
    if sigma is None:
        a = as_matrix(a, "A")
        sigma = np.linalg.svd(a, compute_uv=False)
        # Numerically zero singular values count as zero.
        floor = np.finfo(float).eps * max(a.shape) * (sigma[0] if sigma.size else 0.0)
        sigma = np.where(sigma > floor, sigma, 0.0)
    s2 = np.asarray(sigma, dtype=np.float64) ** 2
    if lam == 0:
        return float(np.count_nonzero(s2 > 0))
    return float(np.sum(s2 / (s2 + lam)))


def orthobasis(a, rank_tol=1e-10):
    """Orthonormal basis of ``range(A)`` keeping A's block boundaries.

    Singular directions with ``sigma <= rank_tol * sigma_max`` are dropped, so
    rank-deficient input yields fewer columns.
    """
    if not isinstance(a, PartitionedMatrix):
        a = PartitionedMatrix(a, (np.asarray(a).shape[0],))
    flat = as_matrix(a.data, "A")
    if flat.shape[0] < flat.shape[1]:
        raise ValidationError(f"orthobasis needs rows >= cols, got {flat.shape}")
    u, s, _ = np.linalg.svd(flat, full_matrices=False)
    keep = s > rank_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    return a.with_data(np.ascontiguousarray(u[:, keep]))


def check_orthonormal(u, tol=ORTHO_TOL, name="U"):
    u = np.asarray(u)
    dev = float(np.max(np.abs(u.T @ u - np.eye(u.shape[1]))))
    if dev > tol:
        raise ValidationError(f"{name} is not orthonormal (max |U^T U - I| = {dev:.3e})")
    return dev


def block_gamma(uj):
    """Coherence of one block: ``min(N_j * max|U_j|^2, ||U_j||_2^2)``."""
    if uj.size == 0 or not np.any(uj):
        return 0.0
    inf_term = uj.shape[0] * float(np.max(np.abs(uj))) ** 2
    spec_term = spectral_norm(uj, tol=GAMMA_NORM_TOL) ** 2
    return min(inf_term, spec_term)


def block_coherence(u):
    check_orthonormal(u.data)
    gammas = tuple(block_gamma(b) for b in u.blocks)
    return CoherenceProfile(gammas, u.block_rows, u.cols)


def _ceil_product(m0, g):
    # Round away float noise first so e.g. 40 * 0.3 is not pushed to 13.
    return math.ceil(round(m0 * g, 9))


def allocate(m0, profile):
    if int(m0) < 1:
        raise ValidationError("m0 must be at least 1")
    gammas = profile.gammas if isinstance(profile, CoherenceProfile) else tuple(profile)
    sizes = tuple(max(1, _ceil_product(int(m0), g)) for g in gammas)
    return BlockAllocation(int(m0), sizes)


def allocate_total(total, profile):
    """Allocation with the largest ``m0`` whose total stays within ``total``.

    Raises when ``total`` is smaller than the number of blocks.
    """
    gammas = profile.gammas if isinstance(profile, CoherenceProfile) else tuple(profile)
    if total < len(gammas):
        raise ValidationError(f"total sketch size {total} < number of blocks {len(gammas)}")
    if not any(g > 0 for g in gammas):
        return allocate(1, gammas)
    # Any m0 above total / sum(gammas) overshoots; also stay within exact float ints.
    ratio = total / sum(gammas)
    cap = int(ratio) + 1 if ratio < 2**53 else 2**53
    if allocate(cap, gammas).total <= total:
        return allocate(cap, gammas)
    lo, hi = 1, 2
    while hi < cap and allocate(hi, gammas).total <= total:
        hi *= 2
    hi = min(hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if allocate(mid, gammas).total <= total:
            lo = mid
        else:
            hi = mid
    return allocate(lo, gammas)


def uniform_allocation(total, n_blocks):
    """``floor(total / J)`` rows per block, remainder spread over the first blocks."""
    if total < n_blocks:
        raise ValidationError(f"total sketch size {total} < number of blocks {n_blocks}")
    base, extra = divmod(int(total), n_blocks)
    return BlockAllocation(int(total), tuple(base + (j < extra) for j in range(n_blocks)))
