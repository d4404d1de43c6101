"""Numba dispatch.

Hot kernels are written once in a numba-compatible subset of Python and
decorated with :func:`kernel`.  Setting ``SORTNET_NO_NUMBA=1`` (or running
without numba installed) leaves them as plain Python, and the vectorised
numpy paths in :mod:`sortnet.kernels` are used wherever one exists.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None


def _env_disabled():
    return os.environ.get("SORTNET_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = numba is not None and not _env_disabled()


def kernel(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn
