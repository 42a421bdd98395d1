"""Block-diagonal sketching for distributed least squares and matrix products."""
from ._accel import BACKEND
from .errors import (
    ConvergenceError,
    NotPositiveDefiniteError,
    NumericalError,
    ValidationError,
)
from .estimate import (
    EstimateResult,
    EstimatorConfig,
    estimate_block_coherence,
    exact_block_importance,
)
from .linalg import PartitionedMatrix, qr_thin, solve_spd, spectral_norm
from .measures import (
    BlockAllocation,
    CoherenceProfile,
    allocate,
    allocate_total,
    block_coherence,
    orthobasis,
    stable_rank,
    statistical_dimension,
    uniform_allocation,
)
from .rng import RandomSource
from .sketch import (
    SketchOperator,
    adjoint_apply,
    apply,
    build_block_diagonal,
    build_dense_gaussian,
    build_subsampled_fourier,
    from_descriptor,
    materialize,
)
from .solvers import (
    RidgeProblem,
    RidgeSolution,
    approx_matmul,
    embedding_deviation,
    matmul_error,
    ridge_exact,
    ridge_sketched,
    structural_conditions,
)

__version__ = "0.1.0"
