"""Estimate per-block importance without forming an orthobasis of ``A``.

Each round sketches every block locally with a fresh short operator
``Omega_j`` (``c x N_j``), stacks the ``J`` results under the rows gathered so
far and re-factors ``A_hat = Q R``. Once the numerical rank of ``R`` has been
stable for a few rounds, ``A R^+`` approximates an orthobasis and the block
importance is read off as ``||A_j R^+||_F^2``, normalized to sum to one.
"""
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ValidationError
from .linalg import PartitionedMatrix, qr_thin
from .measures import orthobasis
from .rng import as_source
from .sketch import subsampled_transform_rows


@dataclass(frozen=True)
class EstimatorConfig:
    rows_per_round: int = None  # default max(4, ceil(d / 8))
    rank_tol: float = 1e-8
    stable_rounds: int = 2
    max_rounds: int = 10
    omega: str = "gaussian"  # or "fourier"

    def __post_init__(self):
        if self.rows_per_round is not None and self.rows_per_round < 1:
            raise ValidationError("rows_per_round must be >= 1")
        if self.stable_rounds < 1:
            raise ValidationError("stable_rounds must be >= 1")
        if self.max_rounds < self.stable_rounds:
            raise ValidationError("max_rounds must be >= stable_rounds")
        if self.omega not in ("gaussian", "fourier"):
            raise ValidationError(f"omega must be 'gaussian' or 'fourier', got {self.omega!r}")

    def rows_for(self, d):
        return self.rows_per_round or max(4, math.ceil(d / 8))


@dataclass(frozen=True)
class EstimateResult:
    gammas_hat: tuple
    rounds_used: int
    converged: bool
    numerical_rank: int

    def to_json(self):
        d = asdict(self)
        d["gammas_hat"] = list(self.gammas_hat)
        return json.dumps(d)


def _numerical_rank(r, tol):
    s = np.linalg.svd(r, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def _truncated_right_solve(a, r, rank, tol):
    """``A R^+`` with ``R^+`` cut to the numerical rank."""
    if rank == r.shape[0] and np.all(np.abs(np.diag(r)) > 0):
        return solve_triangular(r, a.T, trans="T", lower=False).T
    u, s, vt = np.linalg.svd(r)
    keep = s > tol * s[0]
    return (a @ vt[keep].T) / s[keep] @ u[:, keep].T


def _sketch_block(block, c, gen, omega):
    if omega == "fourier":
        return subsampled_transform_rows(block, c, gen)
    return gen.standard_normal((c, block.shape[0])) @ block / np.sqrt(c)


def estimate_block_coherence(a, cfg=None, seed=0, block_keys=None):
    """Normalized block-importance estimates ``||A_j R^+||_F^2 / sum``.

    Block ``j`` in round ``t`` draws from ``seed.substream(key_j).substream(t)``
    with ``key_j = block_keys[j]`` (default ``j``); permuting the blocks along
    with their keys permutes the estimates.
    """
    cfg = cfg or EstimatorConfig()
    if not isinstance(a, PartitionedMatrix):
        raise ValidationError("estimate_block_coherence expects a PartitionedMatrix")
    if a.total_rows < a.cols:
        raise ValidationError(f"need total rows >= cols, got {a.data.shape}")
    if not np.any(a.data):
        raise ValidationError("cannot estimate coherence of an all-zero matrix")
    seed = as_source(seed)
    if block_keys is None:
        block_keys = range(a.n_blocks)
    block_seeds = [seed.substream(k) for k in block_keys]
    if len(block_seeds) != a.n_blocks:
        raise ValidationError("block_keys must name every block")
    c = cfg.rows_for(a.cols)

    gathered = []
    ranks = []
    stable = 0
    converged = False
    r = None
    for t in range(cfg.max_rounds):
        for j, blk in enumerate(a.blocks):
            gen = block_seeds[j].substream(t).generator()
            gathered.append(_sketch_block(blk, c, gen, cfg.omega))
        a_hat = np.vstack(gathered)
        if a_hat.shape[0] >= a.cols:
            _, r = qr_thin(a_hat)
        else:
            # Too few rows for a thin QR yet; R from the full factorization.
            r = np.linalg.qr(a_hat, mode="r")
        rank = _numerical_rank(r, cfg.rank_tol)
        if ranks and rank == ranks[-1]:
            stable += 1
        else:
            stable = 0
        ranks.append(rank)
        if stable >= cfg.stable_rounds:
            converged = True
            break

    rank = ranks[-1]
    if r.shape[0] < a.cols:
        r = np.vstack([r, np.zeros((a.cols - r.shape[0], a.cols))])
    q_est = _truncated_right_solve(a.data, r, rank, cfg.rank_tol)
    off = a.offsets
    raw = np.array([np.sum(q_est[off[j]:off[j + 1]] ** 2) for j in range(a.n_blocks)])
    total = raw.sum()
    gammas = raw / total if total > 0 else np.full(a.n_blocks, 1.0 / a.n_blocks)
    return EstimateResult(tuple(float(g) for g in gammas), len(ranks), converged, rank)


def exact_block_importance(a, rank_tol=1e-10):
    """Normalized ``||U_j||_F^2`` from an exact orthobasis; sums to one."""
    if not isinstance(a, PartitionedMatrix):
        raise ValidationError("exact_block_importance expects a PartitionedMatrix")
    u = orthobasis(a, rank_tol)
    raw = np.array([np.sum(b * b) for b in u.blocks])
    return raw / raw.sum()
