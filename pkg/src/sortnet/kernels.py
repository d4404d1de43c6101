"""Bulk evaluation of comparator networks over every binary input.

Two interchangeable implementations: a numba loop (one pass per input, all
comparators) and a numpy one (one pass per comparator, all inputs).  The
numba path is selected unless ``SORTNET_NO_NUMBA`` is set.
"""

import numpy as np

from ._accel import USE_NUMBA, kernel


@kernel
def _eval_all_loop(n, lo, hi):
    size = 1 << n
    out = np.empty(size, dtype=np.int64)
    ncomp = lo.shape[0]
    for m in range(size):
        v = m
        for c in range(ncomp):
            a = lo[c]
            b = hi[c]
            if (v >> a) & 1 and not (v >> b) & 1:
                v ^= (1 << a) | (1 << b)
        out[m] = v
    return out


def _eval_all_numpy(n, lo, hi):
    v = np.arange(1 << n, dtype=np.int64)
    for a, b in zip(lo.tolist(), hi.tolist()):
        swap = ((v >> a) & 1) & ~((v >> b) & 1) & 1
        v ^= (swap << a) | (swap << b)
    return v


def eval_all(n, lo, hi, use_numba=None):
    """Network output for every input ``m`` in ``[0, 2**n)``.

    ``lo``/``hi`` hold 0-based bit positions of each comparator in
    application order.
    """
    lo = np.ascontiguousarray(lo, dtype=np.int64)
    hi = np.ascontiguousarray(hi, dtype=np.int64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _eval_all_loop(n, lo, hi)
    return _eval_all_numpy(n, lo, hi)


def popcount(values):
    """Vectorised popcount for non-negative int64 arrays (n <= 63)."""
    v = np.asarray(values, dtype=np.int64).copy()
    count = np.zeros_like(v)
    while np.any(v):
        count += v & 1
        v >>= 1
    return count


def sorted_values(n):
    """``sorted(m)`` for every m: popcount(m) ones packed into the top bits."""
    full = (1 << n) - 1
    p = popcount(np.arange(1 << n, dtype=np.int64))
    return full ^ ((np.int64(1) << (n - p)) - 1)
