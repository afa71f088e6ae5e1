"""Vectorised subset scans.

Exhaustive searches run in two passes: a float64 pass over all 2^n subsets
shortlists every candidate within a safety margin of the float maximum,
then the shortlist is re-ranked with exact rationals.  The margin is far
larger than any accumulated rounding error, so the exact winner is always
on the shortlist and the verdict never depends on floating point.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Relative margin; float64 error on sums of <= 20 terms is ~1e-14 relative.
_MARGIN = 1e-9


@lru_cache(maxsize=None)
def all_masks(n: int) -> np.ndarray:
    out = np.arange(1 << n, dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def bit_matrix(n: int) -> np.ndarray:
    """``(2^n, n)`` 0/1 float matrix; row S has a one in column j iff j in S."""
    m = ((all_masks(n)[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.float64)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    masks = all_masks(n)
    out = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        out += (masks >> j) & 1
    out.setflags(write=False)
    return out


def margin(*magnitudes: float) -> float:
    scale = 1.0
    for m in magnitudes:
        if np.isfinite(m):
            scale += abs(float(m))
    return _MARGIN * scale


def shortlist(scores: np.ndarray, magnitude: float) -> np.ndarray:
    """Indices whose float score is within the safety margin of the max.

    ``-inf`` entries mark infeasible subsets and are never returned unless
    every entry is infeasible, in which case the result is empty.
    """
    finite = np.isfinite(scores)
    if not finite.any():
        return np.empty(0, dtype=np.int64)
    top = scores[finite].max()
    return np.flatnonzero(finite & (scores >= top - margin(top, magnitude)))


def submasks(mask: int):
    """All submasks of ``mask`` in increasing order, including 0 and mask."""
    subs = []
    s = mask
    while True:
        subs.append(s)
        if s == 0:
            break
        s = (s - 1) & mask
    subs.reverse()
    return subs


def elements(mask: int) -> list[int]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return out
