"""Connectedness verdicts for two-map attractors.

The attractor of ``{f, g_w}`` is connected exactly when ``f(A)`` and
``g_w(A)`` intersect, so each verdict comes from measuring the gap between
the two images of a certified cover of ``A`` on a schedule of resolutions:
a gap wider than the approximation error proves disconnection, and persistent
overlap plus a single chain component at the finest level is reported as
connected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .maps import AnyMap, ContractionMap, TranslatedMap, as_vector, fixed_point, spectral_norm
from .sets import (
    AttractorApprox,
    BudgetExceeded,
    CellSet,
    _offsets,
    attractor_approx,
    hausdorff_distance,
    image_cellset,
    min_distance,
)

# images of orbit points this close (in units of eps*sqrt(d)) count as touching
TOUCH_CELLS = 2.0
# past this many neighbour offsets the edge search switches to a KD-tree
_MAX_OFFSETS = 4096


class UnionFind:
    """Disjoint sets over ``0..n-1`` with batched, vectorised unions."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)

    def find_all(self) -> np.ndarray:
        p = self.parent
        while True:
            q = p[p]
            if np.array_equal(q, p):
                break
            p = q
        self.parent = p
        return p

    def union_edges(self, a, b) -> None:
        """Merge the endpoints of every edge ``(a[k], b[k])``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.size == 0:
            return
        while True:
            root = self.find_all()
            ra, rb = root[a], root[b]
            live = ra != rb
            if not live.any():
                return
            ra, rb = ra[live], rb[live]
            hi = np.maximum(ra, rb)
            lo = np.minimum(ra, rb)
            # hook each larger root onto the smallest root it touches
            target = self.parent.copy()
            np.minimum.at(target, hi, lo)
            self.parent = target
            a, b = a[live], b[live]

    def count(self) -> int:
        root = self.find_all()
        return int(np.count_nonzero(root == np.arange(root.size)))

    def labels(self) -> np.ndarray:
        root = self.find_all()
        _, lab = np.unique(root, return_inverse=True)
        return lab.reshape(-1)


def neighbour_edges(S: CellSet, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs of cells whose Chebyshev index distance is at most ``radius``."""
    if radius < 1:
        raise ValueError("radius must be at least one cell")
    n, d = S.cells.shape
    if n == 0:
        e = np.zeros(0, dtype=np.int64)
        return e, e
    if (2 * radius + 1) ** d <= _MAX_OFFSETS:
        offs = _offsets(d, radius)
        # keep one offset of each +/- pair: first nonzero coordinate positive
        nz = offs != 0
        first = np.argmax(nz, axis=1)
        keep = nz.any(axis=1) & (offs[np.arange(len(offs)), first] > 0)
        src, dst = [], []
        for off in offs[keep]:
            j = S.index_of(S.cells + off)
            hit = j >= 0
            src.append(np.flatnonzero(hit))
            dst.append(j[hit])
        return np.concatenate(src), np.concatenate(dst)
    tree = cKDTree(S.cells.astype(float))
    pairs = tree.query_pairs(radius + 0.5, p=np.inf, output_type="ndarray")
    return pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)


def epsilon_components(S: CellSet, radius: int = 1) -> int:
    """Number of classes of ``S`` under chains of steps of at most ``radius`` cells."""
    if len(S) == 0:
        return 0
    uf = UnionFind(len(S))
    uf.union_edges(*neighbour_edges(S, 1))
    if radius == 1 or uf.count() == 1:
        return uf.count()
    # wider chains only merge more; redo with the full neighbourhood
    uf.union_edges(*neighbour_edges(S, radius))
    return uf.count()


def chain_radius(A: AttractorApprox) -> int:
    """Cell radius that links every gap a connected ``A`` can leave in its cover."""
    eps = A.eps
    return max(1, math.ceil(2 * (A.err + 0.5 * eps * math.sqrt(A.cover.dim)) / eps - 1e-12))


# ---------------------------------------------------------------------------
# verdicts


class Class(enum.Enum):
    CONNECTED = "CONNECTED"
    DISCONNECTED = "DISCONNECTED"
    UNKNOWN = "UNKNOWN"

    @property
    def gray(self) -> int:
        return {"CONNECTED": 255, "UNKNOWN": 128, "DISCONNECTED": 0}[self.value]


@dataclass(frozen=True)
class Verdict:
    cls: Class
    gap: float
    threshold: float
    components: int
    resolutions: tuple[float, ...]
    margin: float
    note: str = ""
    # largest center norm of the last cover computed (attractor extent)
    extent: float = math.nan

    def to_dict(self) -> dict:
        return {
            "class": self.cls.value,
            "gap": self.gap,
            "threshold": self.threshold,
            "components": self.components,
            "resolutions": list(self.resolutions),
            "margin": self.margin,
            "note": self.note,
            "extent": self.extent,
        }


@dataclass(frozen=True)
class Policy:
    """Resolution schedule ``eps0 / 2**k`` for ``k < levels`` and the cell budget."""

    eps0: float = 1 / 64
    levels: int = 5
    max_cells: int = 2_000_000
    tol: float = 0.0

    def __post_init__(self):
        if not self.eps0 > 0 or self.levels < 1 or self.max_cells < 1:
            raise ValueError("policy needs eps0 > 0, levels >= 1, max_cells >= 1")

    def schedule(self) -> list[float]:
        return [self.eps0 / 2**k for k in range(self.levels)]

    @property
    def finest(self) -> float:
        return self.schedule()[-1]

    def halved(self) -> "Policy":
        return Policy(self.eps0 / 2, self.levels, self.max_cells, self.tol)

    def to_dict(self) -> dict:
        return {"eps0": self.eps0, "levels": self.levels, "max_cells": self.max_cells,
                "tol": self.tol, "schedule": self.schedule()}


def _step_lipschitz(m: AnyMap) -> float:
    """Lipschitz bound of one application, at least 1."""
    if m.block == 1:
        return 1.0
    aff = m.affine_part
    if aff is None:
        raise ValueError("block moduli are only supported for affine maps")
    return max(1.0, spectral_norm(aff.linear))


def gap_threshold(f: AnyMap, gw: AnyMap, A: AttractorApprox) -> float:
    """Gap above which the true images of ``A`` under ``f`` and ``gw`` are disjoint."""
    lip = max(_step_lipschitz(f), _step_lipschitz(gw))
    return 2 * (lip * A.err + A.eps * math.sqrt(A.cover.dim))


def overlap_gap(f: AnyMap, gw: AnyMap, A: AttractorApprox) -> float:
    """Least center distance between the snapped images ``f(A)`` and ``gw(A)``."""
    X = image_cellset(f, A.cover, collar=False)
    Y = image_cellset(gw, A.cover, collar=False)
    return min_distance(X.centers, Y.centers)


def orbit_gap(f: AnyMap, gw: AnyMap, A: AttractorApprox) -> float:
    """Least distance between ``f`` and ``gw`` images of the exact orbit points.

    The orbit points lie on the attractor (up to the seed tolerance), so this
    is an upper bound on the distance between ``f(A)`` and ``gw(A)``.
    """
    return min_distance(f(A.points), gw(A.points))


def touches(f: AnyMap, gw: AnyMap, A: AttractorApprox) -> bool:
    """True when the images come within ``TOUCH_CELLS * eps * sqrt(d)``."""
    return orbit_gap(f, gw, A) <= TOUCH_CELLS * A.eps * math.sqrt(A.cover.dim)


def _extent(A: AttractorApprox) -> float:
    return float(np.max(np.linalg.norm(A.cover.centers, axis=1)))


def classify(f: ContractionMap, g: ContractionMap, w, policy: Policy | None = None) -> Verdict:
    """Connectedness verdict for the attractor of ``{f, g + w}``.

    DISCONNECTED is certified as soon as the image gap exceeds
    ``gap_threshold`` at some level. CONNECTED needs the images of exact orbit
    points to come within ``TOUCH_CELLS * eps * sqrt(d)`` at the two finest
    levels (so the true images are at least that close) and the finest cover
    to form one chain component.
    Anything else, including an exhausted cell budget, is UNKNOWN.
    """
    policy = policy or Policy()
    w = as_vector(w, g.dim)
    gw = TranslatedMap(g, w)
    done: list[float] = []
    touching: list[bool] = []
    gap = thr = math.nan
    A = None
    for eps in policy.schedule():
        try:
            A = attractor_approx(f, gw, eps, policy.tol, max_cells=policy.max_cells)
        except BudgetExceeded:
            return Verdict(Class.UNKNOWN, gap, thr, -1, tuple(done),
                           abs(gap - thr) if done else 0.0, "budget")
        done.append(eps)
        X = image_cellset(f, A.cover, collar=False)
        Y = image_cellset(gw, A.cover, collar=False)
        gap = min_distance(X.centers, Y.centers)
        thr = gap_threshold(f, gw, A)
        if gap > thr:
            return Verdict(Class.DISCONNECTED, gap, thr, -1, tuple(done), gap - thr, "", _extent(A))
        touching.append(touches(f, gw, A))
    comps = epsilon_components(A.cover, chain_radius(A))
    margin = thr - gap
    if len(touching) >= 2 and touching[-1] and touching[-2] and comps == 1:
        return Verdict(Class.CONNECTED, gap, thr, comps, tuple(done), margin, "", _extent(A))
    return Verdict(Class.UNKNOWN, gap, thr, comps, tuple(done), margin, "", _extent(A))


# ---------------------------------------------------------------------------
# decomposition of g_w(A)


def decomposition_residual(f: AnyMap, gw: AnyMap, A: AttractorApprox, N: int) -> float:
    """Hausdorff distance between ``gw(A)`` and the truncated union
    ``{e} u gw(f(A)) u ... u gw^N(f(A))`` built from the same cover of ``A``,
    where ``e`` is the fixed point of ``gw``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    eps = A.eps
    X = image_cellset(gw, A.cover, collar=False)
    e = fixed_point(gw)
    P = f(A.cover.centers)
    parts = [e.reshape(1, -1)]
    for _ in range(N):
        P = gw(P)
        parts.append(P)
    Y = CellSet.from_points(np.vstack(parts), eps)
    return hausdorff_distance(X, Y)


def decomposition_check(f: AnyMap, gw: AnyMap, A: AttractorApprox, N: int) -> list[float]:
    """Residuals for truncation depths ``1..N``."""
    return [decomposition_residual(f, gw, A, n) for n in range(1, N + 1)]


def fixed_point_membership(e, D: CellSet) -> bool:
    """True when the cell of ``e`` or one of its neighbours belongs to ``D``."""
    e = as_vector(e, D.dim)
    base = np.floor(e / D.eps).astype(np.int64)
    return bool(D.contains_cells(base + _offsets(D.dim, 1)).any())
