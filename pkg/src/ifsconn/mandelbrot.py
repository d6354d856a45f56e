"""Rasters of the translation-parameter set of connected attractors.

For a fixed pair ``(f, g)`` the set of translations ``w`` for which the
attractor of ``{f, g + w}`` is connected is swept over a one- or
two-dimensional window of parameter space. Also here: the determinant fast
path, self-affine tile systems, the sets ``M_{g,n,D}`` of translations with
``D`` meeting ``g_w^n(D)``, and a covering raster that contains every
connected pixel.

Raster layout: a window with axes ``u`` (and ``v``) has node-centered
pixels ``center + s*u (+ t*v)`` with ``s`` (and ``t``) running over
``linspace(-half_width, half_width, resolution)``. Arrays are indexed
``[i]`` or ``[i, j]`` with ``i`` along the first axis.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.spatial import cKDTree

from .connectivity import Class, Policy, Verdict, classify
from .maps import AffineMap, ContractionMap, TranslatedMap, as_vector, partial_sum_closed_form, spectral_norm
from .sets import BudgetExceeded, CellSet, _offsets, attractor_approx, hausdorff_points, image_cellset

ORTHO_TOL = 1e-10
DET_SLACK = 1e-12
EXPANDING_MARGIN = 1e-9
MAX_TILE_POWER = 32
# occupancy grids above this many entries fall back to pairwise differences
_FFT_LIMIT = 1 << 26


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True, eq=False)
class ParamWindow:
    """A 1-D or 2-D affine slice of parameter space sampled on a node grid."""

    center: np.ndarray
    axes: np.ndarray
    half_widths: tuple
    resolution: int

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(-1)
        axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        hw = tuple(float(h) for h in np.atleast_1d(self.half_widths))
        if axes.shape[1] != center.size:
            raise ValueError("axes and center have different dimensions")
        if axes.shape[0] not in (1, 2) or axes.shape[0] > center.size:
            raise ValueError("a window has one or two axes, at most the parameter dimension")
        if len(hw) != axes.shape[0] or min(hw) <= 0:
            raise ValueError("need one positive half-width per axis")
        gram = axes @ axes.T
        if np.max(np.abs(gram - np.eye(axes.shape[0]))) > ORTHO_TOL:
            raise ValueError("window axes must be orthonormal")
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise ValueError("resolution must be an integer >= 2")
        for name, val in (("center", center), ("axes", axes)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "half_widths", hw)
        object.__setattr__(self, "resolution", int(self.resolution))

    @classmethod
    def interval(cls, lo: float, hi: float, resolution: int) -> "ParamWindow":
        """Window ``[lo, hi]`` of the real line."""
        return cls([(lo + hi) / 2], [[1.0]], ((hi - lo) / 2,), resolution)

    @classmethod
    def square(cls, center, half_width: float, resolution: int) -> "ParamWindow":
        """Axis-aligned square in the plane."""
        return cls(center, np.eye(2), (half_width, half_width), resolution)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def ndim(self) -> int:
        return self.axes.shape[0]

    @property
    def shape(self) -> tuple:
        return (self.resolution,) * self.ndim

    @property
    def size(self) -> int:
        return self.resolution ** self.ndim

    def coords(self, axis: int = 0) -> np.ndarray:
        h = self.half_widths[axis]
        return np.linspace(-h, h, self.resolution)

    def spacing(self, axis: int = 0) -> float:
        return 2 * self.half_widths[axis] / (self.resolution - 1)

    def pixel_coords(self) -> np.ndarray:
        """Window coordinates of every pixel, C order, shape ``(size, ndim)``."""
        grids = np.meshgrid(*[self.coords(a) for a in range(self.ndim)], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def pixel_params(self) -> np.ndarray:
        """Parameter vectors of every pixel, C order, shape ``(size, dim)``."""
        return self.center + self.pixel_coords() @ self.axes

    def locate(self, w) -> tuple:
        """Index of the pixel nearest to the parameter ``w``."""
        s = (as_vector(w, self.dim) - self.center) @ self.axes.T
        idx = []
        for a in range(self.ndim):
            k = int(round((s[a] + self.half_widths[a]) / self.spacing(a)))
            idx.append(min(max(k, 0), self.resolution - 1))
        return tuple(idx)

    def refined(self) -> "ParamWindow":
        """Same window with every pixel gap halved."""
        return ParamWindow(self.center, self.axes, self.half_widths, 2 * (self.resolution - 1) + 1)

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.pixel_params(), axis=1)))

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "axes": self.axes.tolist(),
                "half_widths": list(self.half_widths), "resolution": self.resolution}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamWindow":
        return cls(d["center"], d["axes"], tuple(d["half_widths"]), d["resolution"])


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepReport:
    maps: dict
    window: dict
    policy: dict
    seed: int
    fastpath_enabled: bool
    fastpath_used: bool
    workers: int
    counts: dict
    timings: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "maps": self.maps,
            "window": self.window,
            "policy": self.policy,
            "seed": self.seed,
            "fastpath": {"enabled": self.fastpath_enabled, "used": self.fastpath_used},
            "workers": self.workers,
            "counts": self.counts,
            "timings": self.timings,
        }
        out.update(self.extra)
        return out


@dataclass
class ClassificationRaster:
    """Per-pixel verdicts over a window, in C order."""

    window: ParamWindow
    verdicts: list
    report: SweepReport
    f: ContractionMap
    g: ContractionMap
    policy: Policy

    def __post_init__(self):
        if len(self.verdicts) != self.window.size:
            raise ValueError("one verdict per pixel is required")

    @property
    def classes(self) -> np.ndarray:
        return np.array([v.cls for v in self.verdicts], dtype=object).reshape(self.window.shape)

    @property
    def gray(self) -> np.ndarray:
        return np.array([v.cls.gray for v in self.verdicts], dtype=np.uint8).reshape(self.window.shape)

    def verdict_at(self, idx) -> Verdict:
        return self.verdicts[int(np.ravel_multi_index(tuple(idx), self.window.shape))]

    def counts(self) -> dict:
        return _count(self.verdicts)


def _count(verdicts) -> dict:
    out = {c.value: 0 for c in Class}
    for v in verdicts:
        out[v.cls.value] += 1
    return out


def det_fastpath(f, g) -> bool:
    """True when ``|det f| + |det g| >= 1``; then every translation gives a connected attractor."""
    fa = f if isinstance(f, AffineMap) else f.affine_part
    ga = g if isinstance(g, AffineMap) else g.affine_part
    if fa is None or ga is None:
        raise ValueError("the determinant test needs affine maps")
    if fa.dim != ga.dim:
        raise ValueError("maps act on different dimensions")
    total = abs(np.linalg.det(fa.linear)) + abs(np.linalg.det(ga.linear))
    return bool(total >= 1.0 - DET_SLACK)


def _classify_chunk(args):
    f, g, policy, params = args
    return [classify(f, g, w, policy) for w in params]


def classify_points(f: ContractionMap, g: ContractionMap, params, policy: Policy, workers: int = 1) -> list:
    """Verdicts for each parameter row, merged back in input order."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if workers <= 1 or len(params) < 2:
        return _classify_chunk((f, g, policy, params))
    n_chunks = min(len(params), 4 * workers)
    chunks = np.array_split(np.arange(len(params)), n_chunks)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_classify_chunk, [(f, g, policy, params[c]) for c in chunks]))
    return [v for part in parts for v in part]


def sweep(f: ContractionMap, g: ContractionMap, window: ParamWindow, policy: Policy | None = None, *,
          fastpath: bool = True, workers: int = 1, seed: int = 0) -> ClassificationRaster:
    """Classify every pixel of ``window``."""
    policy = policy or Policy()
    if window.dim != g.dim or f.dim != g.dim:
        raise ValueError("window and maps act on different dimensions")
    f.require_verified()
    g.require_verified()
    t0 = time.perf_counter()
    used = bool(fastpath and f.is_affine and g.is_affine and det_fastpath(f, g))
    if used:
        verdicts = [Verdict(Class.CONNECTED, math.nan, math.nan, -1, (), math.nan, "fastpath")] * window.size
    else:
        verdicts = classify_points(f, g, window.pixel_params(), policy, workers)
    elapsed = time.perf_counter() - t0
    report = SweepReport(
        maps={"f": f.to_dict(), "g": g.to_dict()},
        window=window.to_dict(),
        policy=policy.to_dict(),
        seed=seed,
        fastpath_enabled=fastpath,
        fastpath_used=used,
        workers=workers,
        counts=_count(verdicts),
        timings={"sweep_seconds": elapsed},
    )
    return ClassificationRaster(window, verdicts, report, f, g, policy)


def _boundary_mask(codes: np.ndarray) -> np.ndarray:
    """Pixels with a Chebyshev neighbour of a different class."""
    mask = np.zeros(codes.shape, dtype=bool)
    nd = codes.ndim
    for off in _offsets(nd, 1):
        if not off.any():
            continue
        src = tuple(slice(max(0, -o), codes.shape[a] - max(0, o)) for a, o in enumerate(off))
        dst = tuple(slice(max(0, o), codes.shape[a] - max(0, -o)) for a, o in enumerate(off))
        mask[dst] |= codes[dst] != codes[src]
    return mask


def boundary_refine(r: ClassificationRaster, depth: int, workers: int = 1) -> ClassificationRaster:
    """Subdivide pixels at class boundaries ``depth`` times.

    Each level halves the pixel gap and the attractor resolution. Old pixels
    away from a boundary keep their verdicts; new pixels between agreeing,
    non-boundary neighbours inherit their class; everything else is
    reclassified.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    cur = r
    for level in range(1, depth + 1):
        win = cur.window
        codes = np.array([v.cls.gray for v in cur.verdicts]).reshape(win.shape)
        boundary = _boundary_mask(codes)
        old = np.array(cur.verdicts, dtype=object).reshape(win.shape)
        new_win = win.refined()
        policy = Policy(r.policy.eps0 / 2**level, r.policy.levels, r.policy.max_cells, r.policy.tol)
        out = np.empty(new_win.shape, dtype=object)
        todo = []
        for idx in np.ndindex(*new_win.shape):
            # the old nodes surrounding this new node
            ranges = [(i // 2,) if i % 2 == 0 else (i // 2, i // 2 + 1) for i in idx]
            around = [tuple(c) for c in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(len(idx), -1).T]
            if all(i % 2 == 0 for i in idx):
                if not boundary[around[0]]:
                    out[idx] = old[around[0]]
                    continue
            elif not any(boundary[c] for c in around) and len({codes[c] for c in around}) == 1:
                v = old[around[0]]
                out[idx] = Verdict(v.cls, v.gap, v.threshold, v.components, v.resolutions, v.margin, "inherited")
                continue
            todo.append(idx)
        params = new_win.pixel_params()
        flat = [int(np.ravel_multi_index(i, new_win.shape)) for i in todo]
        fresh = classify_points(cur.f, cur.g, params[flat], policy, workers) if flat else []
        for i, v in zip(todo, fresh):
            out[i] = v
        verdicts = list(out.reshape(-1))
        report = SweepReport(
            maps=cur.report.maps, window=new_win.to_dict(), policy=policy.to_dict(), seed=cur.report.seed,
            fastpath_enabled=cur.report.fastpath_enabled, fastpath_used=cur.report.fastpath_used,
            workers=workers, counts=_count(verdicts), timings=dict(cur.report.timings),
            extra={"refine_depth": level, "reclassified": len(todo)},
        )
        cur = ClassificationRaster(new_win, verdicts, report, cur.f, cur.g, policy)
    return cur


# ---------------------------------------------------------------------------
# tiles


@dataclass(frozen=True, eq=False)
class TileSpec:
    """Expanding integer matrix ``A`` and digit vectors for ``A(T) = U (T + d_i)``."""

    A: np.ndarray
    digits: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        D = np.atleast_2d(np.asarray(self.digits, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if np.any(A != np.round(A)):
            raise ValueError("A must have integer entries")
        if D.shape[1] != A.shape[0]:
            D = D.reshape(-1, A.shape[0])
        if D.shape[0] < 2:
            raise ValueError("at least two digits are required")
        if np.min(np.abs(np.linalg.eigvals(A))) <= 1.0 + EXPANDING_MARGIN:
            raise ValueError("A is not expanding (some eigenvalue has modulus <= 1)")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "digits", D)

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "digits": self.digits.tolist()}


def tile_ifs(spec: TileSpec) -> list[ContractionMap]:
    """Maps ``x -> A^{-1} x + A^{-1} d_i`` with a certified block modulus.

    The least ``m <= 32`` with ``|A^{-m}| < 1`` is used; the modulus then
    bounds ``m``-fold compositions and attractors are iterated in blocks of
    ``m`` steps.
    """
    Ainv = np.linalg.inv(spec.A)
    P = np.eye(spec.A.shape[0])
    for m in range(1, MAX_TILE_POWER + 1):
        P = Ainv @ P
        norm = spectral_norm(P)
        if norm < 1.0:
            return [ContractionMap.affine(Ainv, Ainv @ d, alpha=norm, block=m) for d in spec.digits]
    raise ValueError(f"no power A^-m with m <= {MAX_TILE_POWER} contracts; A is not expanding enough")


# ---------------------------------------------------------------------------
# M-sets and the covering raster


@dataclass
class MembershipRaster:
    window: ParamWindow
    member: np.ndarray
    method: str
    extra: dict = field(default_factory=dict)

    @property
    def gray(self) -> np.ndarray:
        return np.where(self.member, 255, 0).astype(np.uint8)


def _linear(g) -> np.ndarray:
    a = g if isinstance(g, AffineMap) else g.affine_part
    if a is None or not a.is_linear:
        raise ValueError("a linear map (affine with zero offset) is required")
    return a.linear


def minkowski_difference(D: CellSet, G: CellSet) -> np.ndarray:
    """Index rows ``a - b`` for cells ``a`` of ``D`` and ``b`` of ``G``.

    Index ``k`` of the result stands for the point ``eps * k``, the
    difference of the two cell centers.
    """
    if D.eps != G.eps or D.dim != G.dim:
        raise ValueError("cell sets differ in resolution or dimension")
    dlo, dhi = D.cells.min(axis=0), D.cells.max(axis=0)
    glo, ghi = G.cells.min(axis=0), G.cells.max(axis=0)
    shape = tuple(int(s) for s in (dhi - dlo + 1) + (ghi - glo + 1) - 1)
    if math.prod(shape) <= _FFT_LIMIT and len(D) * len(G) > 4096:
        occ_d = np.zeros(tuple(int(s) for s in dhi - dlo + 1))
        occ_d[tuple((D.cells - dlo).T)] = 1.0
        occ_g = np.zeros(tuple(int(s) for s in ghi - glo + 1))
        # flip G so the convolution sums over a - b
        occ_g[tuple((ghi - G.cells).T)] = 1.0
        conv = fftconvolve(occ_d, occ_g)
        hits = np.argwhere(conv > 0.5)
        return hits + (dlo - ghi)
    diff = (D.cells[:, None, :] - G.cells[None, :, :]).reshape(-1, D.dim)
    return np.unique(diff, axis=0)


def _near_lattice(points: np.ndarray, table: CellSet, collar: int) -> np.ndarray:
    """Rows of ``points / eps`` within Chebyshev distance ``collar`` of an index in ``table``."""
    s = points / table.eps
    base = np.floor(s).astype(np.int64)
    hit = np.zeros(len(points), dtype=bool)
    for off in _offsets(points.shape[1], collar + 1):
        k = base + off
        close = np.max(np.abs(k - s), axis=1) <= collar + 1e-12
        if close.any():
            idx = np.flatnonzero(close & ~hit)
            hit[idx] = table.contains_cells(k[idx])
    return hit


def _mset_member(L: np.ndarray, n: int, D: CellSet, w_params: np.ndarray, collar: int) -> np.ndarray:
    Ln = np.linalg.matrix_power(L, n)
    G = CellSet.from_points(D.centers @ Ln.T, D.eps)
    diff = CellSet(D.eps, minkowski_difference(D, G))
    h = partial_sum_closed_form(L, n, w_params)
    return _near_lattice(np.atleast_2d(h), diff, collar)


def mset_compute(g, n: int, D: CellSet, window: ParamWindow, collar: int = 1) -> MembershipRaster:
    """Pixels ``w`` with ``h(w)`` in ``D - g^n(D)`` up to ``collar`` cells.

    ``h(w) = w + Lw + ... + L^{n-1}w`` is the translation part of ``g_w^n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    L = _linear(g)
    if spectral_norm(L) >= 1.0:
        raise ValueError("linear part must have norm < 1")
    member = _mset_member(L, n, D, window.pixel_params(), collar)
    return MembershipRaster(window, member.reshape(window.shape), "minkowski")


def mset_direct(g, n: int, D: CellSet, window: ParamWindow, pixels=None) -> MembershipRaster:
    """Pixels ``w`` whose snapped image ``g_w^n(D)`` touches a cell of ``D``.

    ``pixels`` restricts the check to the given flat pixel indices; other
    pixels are reported as non-members and listed as unchecked.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    L = _linear(g)
    params = window.pixel_params()
    idx = np.arange(window.size) if pixels is None else np.asarray(pixels, dtype=np.int64)
    tree = cKDTree(D.cells.astype(float))
    C = D.centers
    member = np.zeros(window.size, dtype=bool)
    for k in idx:
        P = C
        for _ in range(n):
            P = P @ L.T + params[k]
        cells = np.floor(P / D.eps)
        dist, _ = tree.query(cells, k=1, p=np.inf, distance_upper_bound=1.5)
        member[k] = bool(np.isfinite(dist).any())
    return MembershipRaster(window, member.reshape(window.shape), "direct",
                            {"checked": idx.tolist() if pixels is not None else "all"})


def covering_upper_bound(f: ContractionMap, g: ContractionMap, k: float, nmax: int,
                         window: ParamWindow, eps: float, max_cells: int = 2_000_000) -> MembershipRaster:
    """Raster containing every translation in ``window`` with a connected attractor.

    ``D_k`` covers ``f`` of a ball holding every attractor ``A_w`` with
    ``|w| <= k``. A pixel is marked when ``w`` lies in some ``M_{g,n,D_k}``
    with ``n <= nmax`` or when the fixed point ``e_w`` of ``g_w`` lies within
    ``alpha**(nmax+1) * diam`` of ``D_k``; the latter term absorbs every
    intersection that first appears deeper than ``nmax``.
    """
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    ga = g.affine_part
    if ga is None or g.block != 1 or f.block != 1:
        raise ValueError("g must be an affine single-step contraction")
    if window.max_norm() > k + 1e-12:
        raise ValueError("window must lie inside the ball of radius k")
    L, a = ga.linear, ga.offset
    d = g.dim
    alpha = max(f.modulus.alpha if f.modulus.is_linear else math.nan, g.modulus.alpha)
    if not alpha < 1.0:
        raise ValueError("covering needs linear contraction rates")
    zero = np.zeros(d)
    M = (float(np.linalg.norm(f(zero))) + float(np.linalg.norm(g(zero))) + k) / (1.0 - alpha)
    if (2 * M / eps + 2) ** d > max_cells:
        raise BudgetExceeded(f"covering ball of radius {M:.4g} needs more than {max_cells} cells")
    ball = CellSet.ball(M, eps, d)
    Dk = image_cellset(f, ball, collar=True)
    params = window.pixel_params()
    w_eff = params + a
    marked = np.zeros(window.size, dtype=bool)
    sqd = math.sqrt(d)
    for n in range(1, nmax + 1):
        # snapping g^n(D) and the lattice difference cost up to this many cells
        collar = math.ceil(1.0 + spectral_norm(np.linalg.matrix_power(L, n)) * sqd / 2 + 1e-12)
        todo = ~marked
        if todo.any():
            marked[todo] |= _mset_member(L, n, Dk, w_eff[todo], collar)
    e = np.linalg.solve(np.eye(d) - L, w_eff.T).T
    C = Dk.centers
    dist, _ = cKDTree(C).query(e, k=1)
    reach = float(np.max(np.linalg.norm(C, axis=1))) + np.linalg.norm(e, axis=1)
    tail = alpha ** (nmax + 1) * reach if nmax > 0 else 0.0
    marked |= dist <= tail + eps * sqd / 2 + eps * sqd
    return MembershipRaster(window, marked.reshape(window.shape), "covering",
                            {"k": k, "nmax": nmax, "eps": eps, "ball_radius": M, "Dk_cells": len(Dk)})


# ---------------------------------------------------------------------------
# scaling and the unit-sphere slice


@dataclass(frozen=True)
class ScalingCheck:
    residual: float
    bound: float
    err: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound


def scaling_reduce(f: ContractionMap, g: ContractionMap, w, t: float, eps: float) -> ScalingCheck:
    """Compare ``t * A_w`` with ``A_{tw}`` for linear ``f`` and ``g``."""
    if t == 0:
        raise ValueError("t must be nonzero")
    for m in (f, g):
        a = m.affine_part
        if a is None or not a.is_linear:
            raise ValueError("scaling needs linear maps (zero offsets)")
    w = as_vector(w, g.dim)
    A1 = attractor_approx(f, TranslatedMap(g, w), eps)
    A2 = attractor_approx(f, TranslatedMap(g, t * w), eps)
    res = hausdorff_points(t * A1.cover.centers, A2.cover.centers)
    err = max(A1.err, A2.err)
    return ScalingCheck(res, 2 * (err + eps * math.sqrt(g.dim)) * max(1.0, abs(t)), err)


@dataclass(frozen=True)
class SphereCovers:
    """Lattice difference ``K - E`` of the covers of ``f`` and ``g`` of a ball.

    Index ``k`` of ``diff`` stands for the point ``eps * k``, a difference of
    two cell centers.
    """

    radius: float
    diff: CellSet

    def contains(self, w) -> bool:
        """Whether ``w`` lies within one cell of ``K - E``."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        return bool(_near_lattice(w, self.diff, 1)[0])


def sphere_covers(f: ContractionMap, g: ContractionMap, radius: float, eps: float) -> SphereCovers:
    """Covers ``K`` of ``f(B)`` and ``E`` of ``g(B)`` for the ball ``B`` of ``radius``, differenced."""
    ball = CellSet.ball(radius, eps, g.dim)
    K = image_cellset(f, ball, collar=True)
    E = image_cellset(g, ball, collar=True)
    return SphereCovers(radius, CellSet(eps, minkowski_difference(K, E)))


def sphere_membership(f: ContractionMap, g: ContractionMap, w, eps: float) -> bool:
    """Whether ``w`` lies in ``K - E`` up to one cell, where ``K`` and ``E``
    cover ``f`` and ``g`` of the ball of radius ``|w|/(1-alpha)``.

    Every ``w`` giving a connected attractor of a linear pair passes.
    """
    w = as_vector(w, g.dim)
    alpha = max(f.modulus.alpha, g.modulus.alpha)
    return sphere_covers(f, g, float(np.linalg.norm(w)) / (1.0 - alpha), eps).contains(w)
