"""Independent reference computations used by the tests.

Nothing here imports the package under test: the oracles work from closed
forms (one-dimensional similarity pairs), brute force, or a different
library routine.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


def interval_attractor(a: float, b: float, w: float) -> tuple[float, float]:
    """Hull of the attractor of ``{a x, b x + w}`` for ``0 < a, b < 1``.

    The fixed points are 0 and ``w/(1-b)``, which are the extreme points.
    """
    e = w / (1.0 - b)
    return min(0.0, e), max(0.0, e)


def interval_connected(a: float, b: float, w: float) -> bool:
    """Exact connectedness for positive ratios: images of the hull overlap."""
    return w == 0.0 or a + b >= 1.0


def interval_gap(a: float, b: float, w: float) -> float:
    """Exact distance between ``f(A)`` and ``g_w(A)`` for positive ratios.

    With hull ``[0, e]`` (``w > 0``), ``f(A)`` spans ``[0, a e]`` and
    ``g_w(A)`` spans ``[w, w + b e]``, and both endpoints are attained.
    """
    if w == 0.0:
        return 0.0
    e = abs(w) / (1.0 - b)
    return max(0.0, abs(w) - a * e)


def cantor_level(a: float, b: float, w: float, n: int) -> np.ndarray:
    """Intervals (rows ``[lo, hi]``) of the level-``n`` hull images for positive ratios."""
    lo, hi = interval_attractor(a, b, w)
    iv = np.array([[lo, hi]])
    for _ in range(n):
        iv = np.vstack([a * iv, b * iv + w])
    return iv[np.argsort(iv[:, 0])]


def brute_hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    D = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def brute_min_distance(P: np.ndarray, Q: np.ndarray) -> float:
    return float(np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2).min())


def csgraph_components(cells: np.ndarray, radius: int) -> int:
    """Chebyshev-radius components through scipy's graph routine."""
    n = len(cells)
    D = np.max(np.abs(cells[:, None, :] - cells[None, :, :]), axis=2)
    i, j = np.nonzero(D <= radius)
    adj = coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))
    return int(connected_components(adj, directed=False)[0])


def brute_minkowski(A: np.ndarray, B: np.ndarray) -> set:
    return {tuple(r) for r in (A[:, None, :] - B[None, :, :]).reshape(-1, A.shape[1])}


def halves_mset_interval(n: int) -> tuple[float, float]:
    """Exact M-set of ``g = x/2`` and ``D = [0, 1]``: ``h(w) in [-2^-n, 1]``."""
    c = (1 - 0.5**n) / 0.5
    return -(0.5**n) / c, 1.0 / c
