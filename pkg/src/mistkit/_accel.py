"""Optional numba acceleration.

Set ``MISTKIT_NUMBA=0`` in the environment to force the pure-numpy kernels.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_FLAG = os.environ.get("MISTKIT_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """Compile with numba when it is available, else return the loop version unchanged."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


def njit_parallel(func):
    """As njit, with prange loops spread over threads."""
    if numba is None:
        return func
    return numba.njit(cache=True, parallel=True)(func)


if numba is None:
    prange = range
else:
    prange = numba.prange
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # an old bundled TBB makes numba warn when it is probed first
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def backend():
    return "numba" if USE_NUMBA else "numpy"
