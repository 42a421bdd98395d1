"""Backend selection for the hot kernels.

Set ``LOCSKETCH_BACKEND=numpy`` to force the pure-numpy code paths; the
default is ``numba`` when numba imports cleanly.
"""
import os
import warnings

BACKEND_ENV = "LOCSKETCH_BACKEND"

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency here
    numba = None
    HAS_NUMBA = False


def _requested_backend():
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        warnings.warn(f"{BACKEND_ENV}={value!r} not understood, using numpy")
        return "numpy"
    if value == "numba" and not HAS_NUMBA:
        return "numpy"
    return value


BACKEND = _requested_backend()


# Reassociation lets reductions vectorize; NaN/Inf semantics are kept so a
# poisoned input still shows up in the output.
FASTMATH = {"reassoc", "contract", "arcp", "nsz"}


def njit(func):
    """``numba.njit`` with on-disk caching when numba is importable, else identity."""
    if HAS_NUMBA:
        return numba.njit(cache=True, fastmath=FASTMATH)(func)
    return func


def set_threads(n):
    """Best-effort thread cap for numba and BLAS. Returns the count applied."""
    n = max(1, int(n))
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(n)
    except ImportError:
        pass
    if HAS_NUMBA:
        n = min(n, numba.config.NUMBA_NUM_THREADS)
        with warnings.catch_warnings():
            # Starting the threading layer may warn about an old TBB.
            warnings.simplefilter("ignore")
            numba.set_num_threads(n)
    return n
