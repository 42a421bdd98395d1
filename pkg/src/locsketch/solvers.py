"""Sketched matrix products, ridge regression and embedding diagnostics."""
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import PartitionedMatrix, qr_thin, solve_spd, spectral_norm
from .measures import check_orthonormal
from .sketch import apply


@dataclass(frozen=True)
class RidgeProblem:
    a: PartitionedMatrix
    b: np.ndarray
    lam: float

    def __post_init__(self):
        if not isinstance(self.a, PartitionedMatrix):
            object.__setattr__(self, "a", PartitionedMatrix(self.a, (len(self.a),)))
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if b.shape[0] != self.a.total_rows:
            raise ValidationError(f"b has {b.shape[0]} entries, A has {self.a.total_rows} rows")
        if not self.lam > 0:
            raise ValidationError(f"lambda must be positive, got {self.lam}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def b_partitioned(self):
        return self.a.with_data(self.b)

    def objective(self, x):
        """``||A x - b||^2 + lam ||x||^2`` on the full, unsketched data."""
        r = self.a.data @ x - self.b
        return float(r @ r + self.lam * (x @ x))


@dataclass(frozen=True)
class RidgeSolution:
    x: np.ndarray
    objective: float
    is_sketched: bool
    sketch_descriptor: dict = None


def approx_matmul(s, w, y):
    """``(S W)^T (S Y)``, an estimate of ``W^T Y``."""
    if isinstance(w, PartitionedMatrix) and isinstance(y, PartitionedMatrix):
        if w.block_rows != y.block_rows:
            raise ValidationError(
                f"W and Y partitions differ: {list(w.block_rows)} vs {list(y.block_rows)}"
            )
    sw = apply(s, w)
    sy = apply(s, y)
    return sw.T @ sy


def _data(x):
    arr = x.data if isinstance(x, PartitionedMatrix) else np.asarray(x, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def matmul_error(w, y, p_hat):
    """``||P_hat - W^T Y|| / (||W|| ||Y||)`` in the spectral norm."""
    w, y = _data(w), _data(y)
    p_hat = np.atleast_2d(np.asarray(p_hat, dtype=np.float64))
    exact = w.T @ y
    if p_hat.shape != exact.shape:
        raise ValidationError(f"P_hat has shape {p_hat.shape}, expected {exact.shape}")
    scale = spectral_norm(w) * spectral_norm(y)
    if scale == 0.0:
        raise ValidationError("relative error undefined for zero W or Y")
    return spectral_norm(p_hat - exact) / scale


def _ridge_solve(a, b, lam):
    gram = a.T @ a
    gram = 0.5 * (gram + gram.T)
    gram[np.diag_indices_from(gram)] += lam
    return solve_spd(gram, a.T @ b)


def ridge_exact(p):
    x = _ridge_solve(p.a.data, p.b, p.lam)
    return RidgeSolution(x, p.objective(x), False)


def ridge_sketched(s, p):
    """Minimize ``||S A x - S b||^2 + lam ||x||^2``; report the unsketched objective."""
    sa = apply(s, p.a)
    sb = apply(s, p.b_partitioned)[:, 0]
    x = _ridge_solve(sa, sb, p.lam)
    desc = s.to_descriptor() if s.seed is not None else None
    return RidgeSolution(x, p.objective(x), True, desc)


def _sym_spectral_norm(m):
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (m + m.T)))))


def embedding_deviation(s, u):
    """``||(S U)^T (S U) - I||`` for an orthonormal ``U``."""
    check_orthonormal(_data(u))
    su = apply(s, u)
    return _sym_spectral_norm(su.T @ su - np.eye(su.shape[1]))


def structural_parts(p):
    """Sketch-independent pieces of :func:`structural_conditions`.

    ``U_1`` is the top ``N`` rows of an orthobasis of ``[A; sqrt(lam) I]``,
    ``r = b - A x*`` and ``rhs10 = sqrt(f(x*) / 2)``.
    """
    a = p.a.data
    d = a.shape[1]
    q, _ = qr_thin(np.vstack([a, np.sqrt(p.lam) * np.eye(d)]))
    exact = ridge_exact(p)
    u1 = np.ascontiguousarray(q[: a.shape[0]])
    resid = p.b - a @ exact.x
    return u1, resid, float(np.sqrt(exact.objective / 2.0))


def structural_conditions(s, p, parts=None):
    """Left-hand sides of the two sufficient conditions for sketched ridge.

    Returns ``(lhs9, lhs10, rhs10)`` with
    ``lhs9 = ||U_1^T S^T S U_1 - U_1^T U_1||`` and
    ``lhs10 = ||U_1^T S^T S r - U_1^T r||``; the second condition holds at
    tolerance ``eps`` when ``lhs10 <= sqrt(eps) * rhs10``. See
    :func:`structural_parts` for ``U_1``, ``r`` and ``rhs10``.
    """
    u1, resid, rhs10 = parts if parts is not None else structural_parts(p)
    su = apply(s, p.a.with_data(u1))
    sr = apply(s, p.a.with_data(resid))[:, 0]
    lhs9 = _sym_spectral_norm(su.T @ su - u1.T @ u1)
    lhs10 = float(np.linalg.norm(su.T @ sr - u1.T @ resid))
    return lhs9, lhs10, rhs10
