"""Synthetic problems, experiment drivers, timing benchmarks and data loading."""
import math
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .estimate import EstimatorConfig, estimate_block_coherence
from .linalg import PartitionedMatrix, qr_thin
from .measures import (
    allocate_total,
    block_coherence,
    orthobasis,
    statistical_dimension,
    uniform_allocation,
)
from .rng import RandomSource, as_source
from .sketch import (
    apply,
    build_block_diagonal,
    build_dense_gaussian,
    build_subsampled_fourier,
)
from .solvers import (
    RidgeProblem,
    embedding_deviation,
    ridge_exact,
    ridge_sketched,
    structural_conditions,
    structural_parts,
)

SCHEMA_VERSION = 1


# -- spectrum design ---------------------------------------------------------


def design_spectrum(target_sd, lam, rank, tol=1e-10):
    """Geometric spectrum ``rho**i`` (``i = 0..rank-1``) with ``sd_lam = target_sd``.

    ``sd`` increases with ``rho``, so the feasible targets are
    ``(1/(1+lam), rank/(1+lam)]``; the upper end is the flat spectrum. With
    ``lam = 0`` every positive spectrum has ``sd = rank`` and the flat one is
    returned.
    """
    rank = int(rank)
    if rank < 1:
        raise ValidationError("rank must be positive")
    if lam < 0:
        raise ValidationError("lambda must be nonnegative")
    if lam == 0:
        if abs(target_sd - rank) > 1e-12:
            raise ValidationError(f"with lambda = 0 the only feasible target is {rank}")
        return np.ones(rank)
    lo_sd, hi_sd = 1.0 / (1.0 + lam), rank / (1.0 + lam)
    if not lo_sd < target_sd <= hi_sd + 1e-12:
        raise ValidationError(
            f"target sd {target_sd} infeasible; feasible interval is ({lo_sd:.6g}, {hi_sd:.6g}]"
        )

    def sd(rho):
        return statistical_dimension(None, lam, sigma=rho ** np.arange(rank))

    lo, hi = 0.0, 1.0
    if sd(hi) - target_sd <= tol:
        return np.ones(rank)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = sd(mid)
        if abs(val - target_sd) <= tol:
            break
        if val < target_sd:
            lo = mid
        else:
            hi = mid
    return mid ** np.arange(rank)


# -- synthetic data ----------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    n_total: int = 2000
    blocks: int = 10
    cols: int = 50
    spectrum: tuple = None
    target_sd: float = 8.5
    lam: float = 0.15
    rank: int = 50
    coherence: str = "incoherent"  # or "planted"
    planted_block: int = 0
    planted_strength: float = 0.0
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.coherence not in ("incoherent", "planted"):
            raise ValidationError(f"unknown coherence mode {self.coherence!r}")
        if not 0.0 <= self.planted_strength <= 1.0:
            raise ValidationError("planted strength must lie in [0, 1]")
        if self.spectrum is not None:
            sig = np.asarray(self.spectrum, dtype=float)
            if np.any(sig <= 0) or np.any(np.diff(sig) > 0):
                raise ValidationError("explicit spectrum must be positive and descending")
            object.__setattr__(self, "spectrum", tuple(float(v) for v in sig))

    def sigma(self):
        if self.spectrum is not None:
            return np.array(self.spectrum)
        return design_spectrum(self.target_sd, self.lam, self.rank)

    def to_dict(self):
        d = asdict(self)
        d["spectrum"] = list(self.spectrum) if self.spectrum is not None else None
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("spectrum") is not None:
            d["spectrum"] = tuple(d["spectrum"])
        return cls(**d)


def reference_spec(**overrides):
    """Ridge synthetic at the reference parameters: 2000 x 50, J = 10,
    lambda = 0.15, rank 50, statistical dimension 8.5."""
    return SyntheticSpec(**overrides)


def _block_rows(n_total, blocks):
    if not 1 <= blocks <= n_total:
        raise ValidationError(f"cannot split {n_total} rows into {blocks} blocks")
    base, extra = divmod(n_total, blocks)
    return tuple(base + (j < extra) for j in range(blocks))


def generate(spec):
    """Return ``(A, b, x_true)`` with ``A = U diag(sigma) V^T``.

    ``U`` is the Q factor of a Gaussian matrix (incoherent), or, in planted
    mode, the re-orthonormalized blend ``s * E + (1 - s) * G`` of the
    canonical basis ``E`` of the planted block and a random basis ``G``.
    """
    sigma = spec.sigma()
    rank = sigma.shape[0]
    n, d = spec.n_total, spec.cols
    if rank > min(n, d):
        raise ValidationError(f"rank {rank} exceeds min(N, d) = {min(n, d)}")
    rows = _block_rows(n, spec.blocks)
    root = RandomSource(spec.seed)
    gen_u, gen_v, gen_x, gen_e = (root.substream(k).generator() for k in range(4))

    u, _ = qr_thin(gen_u.standard_normal((n, rank)))
    if spec.coherence == "planted":
        j = spec.planted_block
        if not 0 <= j < len(rows) or rows[j] < rank:
            raise ValidationError(f"planted block {j} cannot hold {rank} canonical directions")
        start = sum(rows[:j])
        canon = np.zeros((n, rank))
        canon[start + np.arange(rank), np.arange(rank)] = 1.0
        s = spec.planted_strength
        u, _ = qr_thin(s * canon + (1.0 - s) * u)
    v, _ = qr_thin(gen_v.standard_normal((d, d)))
    a = (u * sigma) @ v[:, :rank].T
    x_true = gen_x.standard_normal(d)
    b = a @ x_true + spec.noise_sigma * gen_e.standard_normal(n)
    return PartitionedMatrix(a, rows), b, x_true


def make_problem(spec):
    a, b, _ = generate(spec)
    return RidgeProblem(a, b, spec.lam)


# -- sketch strategies -------------------------------------------------------


def _coherence_of(p):
    """Block coherence of an orthobasis of ``[A b]``."""
    ab = p.a.with_data(np.column_stack([p.a.data, p.b]))
    return block_coherence(orthobasis(ab))


def _dense(m_total, p, src, ctx):
    return build_dense_gaussian(m_total, p.a.total_rows, src)


def _uniform(m_total, p, src, ctx):
    return build_block_diagonal(uniform_allocation(m_total, p.a.n_blocks), p.a.block_rows, src)


def _nonuniform(m_total, p, src, ctx):
    if "profile" not in ctx:
        ctx["profile"] = _coherence_of(p)
    return build_block_diagonal(allocate_total(m_total, ctx["profile"]), p.a.block_rows, src)


def _estimated(m_total, p, src, ctx):
    if "gammas_hat" not in ctx:
        ab = p.a.with_data(np.column_stack([p.a.data, p.b]))
        ctx["gammas_hat"] = estimate_block_coherence(ab, EstimatorConfig(), src).gammas_hat
    return build_block_diagonal(allocate_total(m_total, ctx["gammas_hat"]), p.a.block_rows, src)


STRATEGIES = {
    "dense": _dense,
    "uniform": _uniform,
    "nonuniform": _nonuniform,
    "estimated": _estimated,
}


def _resolve(strategies, factories):
    table = dict(STRATEGIES)
    table.update(factories or {})
    unknown = [s for s in strategies if s not in table]
    if unknown:
        raise ValidationError(f"unknown strategies {unknown}; choose from {sorted(table)}")
    return table


def _record(experiment, **fields):
    return {"schema_version": SCHEMA_VERSION, "experiment": experiment, **fields}


def sweep_ratio(
    problem,
    m_grid,
    strategies=("dense", "uniform", "nonuniform"),
    trials=10,
    seed=0,
    diagnostics=False,
    factories=None,
):
    """Quality ratio ``f(x_hat) / f(x*)`` per ``(M, strategy, trial)``.

    ``problem`` is a :class:`RidgeProblem` or a :class:`SyntheticSpec`.
    ``factories`` may add or override strategies; each is called as
    ``factory(m_total, problem, random_source, cache_dict)`` and must return
    a sketch operator. Returns a list of JSON-ready records.
    """
    if isinstance(problem, SyntheticSpec):
        problem = make_problem(problem)
    if not len(m_grid):
        raise ValidationError("m_grid is empty")
    table = _resolve(strategies, factories)
    for m in m_grid:
        if m < problem.a.n_blocks:
            raise ValidationError(f"M = {m} is smaller than the number of blocks")
    f_star = ridge_exact(problem).objective
    parts = structural_parts(problem) if diagnostics else None
    u_ab = None
    if diagnostics:
        u_ab = orthobasis(problem.a.with_data(np.column_stack([problem.a.data, problem.b])))
    ctx = {}
    root = as_source(seed)
    records = []
    for si, name in enumerate(strategies):
        for m in m_grid:
            for t in range(trials):
                src = root.substream(si).substream(int(m)).substream(t)
                s = table[name](int(m), problem, src, ctx)
                t0 = time.perf_counter_ns()
                sol = ridge_sketched(s, problem)
                elapsed = time.perf_counter_ns() - t0
                rec = _record(
                    "sweep",
                    strategy=name,
                    m_total=int(m),
                    m_actual=int(s.n_rows),
                    trial=t,
                    seed=src.to_dict(),
                    ratio=sol.objective / f_star,
                    lhs9=None,
                    lhs10=None,
                    delta_norm=None,
                    wall_time_ns=elapsed,
                )
                if diagnostics:
                    rec["lhs9"], rec["lhs10"], rec["rhs10"] = structural_conditions(
                        s, problem, parts
                    )
                    rec["delta_norm"] = embedding_deviation(s, u_ab)
                records.append(rec)
    return records


def mean_ratios(records):
    """``{strategy: {m_total: mean ratio}}`` from sweep records."""
    acc = {}
    for r in records:
        acc.setdefault(r["strategy"], {}).setdefault(r["m_total"], []).append(r["ratio"])
    return {s: {m: float(np.mean(v)) for m, v in sorted(by_m.items())} for s, by_m in acc.items()}


def phase_transition(problem, m_grid, eps_grid, trials=10, strategy="uniform", seed=0,
                     factories=None):
    """Empirical ``P[f(x_hat) <= (1 + eps) f(x*)]`` on an ``M x eps`` grid.

    Returns ``(probabilities, records)``; rows follow ``m_grid``, columns
    ``eps_grid``.
    """
    if not len(m_grid) or not len(eps_grid):
        raise ValidationError("grids must be nonempty")
    records = sweep_ratio(problem, m_grid, (strategy,), trials, seed, factories=factories)
    ratios = np.array([r["ratio"] for r in records]).reshape(len(m_grid), trials)
    eps = np.asarray(eps_grid, dtype=float)
    prob = (ratios[:, :, None] <= 1.0 + eps[None, None, :]).mean(axis=1)
    return prob, records


# -- timing ------------------------------------------------------------------


def time_apply(s, x, repeats=5, warmup=1):
    """Median seconds of ``apply(s, x)`` after ``warmup`` untimed calls."""
    for _ in range(warmup):
        apply(s, x)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        apply(s, x)
        times.append((time.perf_counter_ns() - t0) * 1e-9)
    return statistics.median(times), times


DENSE_BYTES_LIMIT = 2 << 30


def bench_apply(configs, m_list, d=40, repeats=5, kinds=("block", "fourier", "dense"), seed=0):
    """Median apply time per operator kind over ``(N, J)`` configs and sizes ``M``.

    Operators are built outside the timed region. Dense Gaussians larger than
    ``DENSE_BYTES_LIMIT`` are skipped and reported with ``median_s = None``.
    """
    root = as_source(seed)
    rows = []
    for n, j in configs:
        x = root.substream(n).generator().standard_normal((n, d))
        xp = PartitionedMatrix(x, _block_rows(n, j))
        for m in m_list:
            for kind in kinds:
                src = root.substream(n).substream(m).substream(len(kind))
                row = {"kind": kind, "n": n, "J": j, "m": m, "d": d, "repeats": repeats}
                if kind == "block":
                    s = build_block_diagonal(uniform_allocation(m, j), xp.block_rows, src)
                    arg = xp
                elif kind == "fourier":
                    s = build_subsampled_fourier(m, n, src)
                    arg = x
                elif kind == "dense":
                    if 8 * m * n > DENSE_BYTES_LIMIT:
                        rows.append({**row, "median_s": None, "skipped": "memory"})
                        continue
                    s = build_dense_gaussian(m, n, src)
                    arg = x
                else:
                    raise ValidationError(f"unknown operator kind {kind!r}")
                med, times = time_apply(s, arg, repeats)
                rows.append({**row, "median_s": med, "times_s": times})
                del s
    return rows


# -- datasets ----------------------------------------------------------------


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    kept_columns: np.ndarray
    mean: np.ndarray = None
    scale: np.ndarray = None
    rows: np.ndarray = field(default=None, repr=False)

    def partitioned(self, n_blocks):
        return PartitionedMatrix(self.features, _block_rows(len(self.features), n_blocks))

    def transform(self, features):
        """Apply this dataset's column selection and standardization to new rows."""
        out = np.asarray(features, dtype=float)[:, self.kept_columns]
        if self.mean is not None:
            out = (out - self.mean) / self.scale
        return out


def load_dataset(path, label_column=0, standardize=False, subsample=None, seed=0,
                 skip_header=False):
    """Read a delimited numeric table into features and labels.

    With ``standardize`` each feature column is centered and scaled to unit
    variance using this file's statistics; constant columns are dropped.
    ``subsample`` keeps that many rows chosen uniformly without replacement,
    in file order.
    """
    from .io import read_text

    table = read_text(path, skip_header=skip_header)
    ncol = table.shape[1]
    if not -ncol <= label_column < ncol:
        raise ValidationError(f"label column {label_column} out of range for {ncol} columns")
    label_column %= ncol
    rows = np.arange(table.shape[0])
    if subsample is not None and subsample < table.shape[0]:
        gen = as_source(seed).generator()
        rows = np.sort(gen.choice(table.shape[0], size=int(subsample), replace=False))
        table = table[rows]
    labels = table[:, label_column].copy()
    feats = np.delete(table, label_column, axis=1)
    kept = np.arange(feats.shape[1])
    mean = scale = None
    if standardize:
        std = feats.std(axis=0)
        kept = np.flatnonzero(std > 0)
        feats = feats[:, kept]
        mean = feats.mean(axis=0)
        scale = std[kept]
        feats = (feats - mean) / scale
    return Dataset(np.ascontiguousarray(feats), labels, kept, mean, scale, rows)


def statistical_dimension_of(problem):
    return statistical_dimension(problem.a.data, problem.lam)


def m0_for_theorem2(sd, eps, constant):
    """``M_0 = C * sd / eps`` rounded up."""
    return int(math.ceil(constant * sd / eps))
