"""Lattice cell covers of compact sets, the Hutchinson operator on covers,
the Hausdorff metric, and attractor approximation.

A :class:`CellSet` at resolution ``eps`` is a set of integer index tuples;
index ``c`` stands for the box ``eps * c + [0, eps]^d``. Distances between
cell sets are always measured between cell centers.
"""

from __future__ import annotations

import io
import itertools
import math
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .maps import (
    AnyMap,
    ContractionModulus,
    combined_modulus,
    fixed_point,
    spectral_norm,
)

_MAX_KEY_SPAN = 2**62
_BINARY_MAGIC = b"IFSCELL1"


class BudgetExceeded(RuntimeError):
    """A cover grew past the configured cell budget."""


# ---------------------------------------------------------------------------
# cell sets


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    if rows.shape[1] == 1:
        return np.unique(rows[:, 0]).reshape(-1, 1)
    return np.unique(rows, axis=0)


def _key_layout(lo: np.ndarray, hi: np.ndarray):
    """Mixed-radix strides for rows inside ``[lo, hi]``, or None on overflow."""
    span = (hi - lo + 1).astype(object)
    total = 1
    for s in span:
        total *= int(s)
    if total >= _MAX_KEY_SPAN:
        return None
    strides = np.ones(len(span), dtype=np.int64)
    for k in range(len(span) - 2, -1, -1):
        strides[k] = strides[k + 1] * int(span[k + 1])
    return strides


@dataclass(frozen=True, eq=False)
class CellSet:
    """Finite, nonempty set of lattice cells at resolution ``eps``."""

    eps: float
    cells: np.ndarray

    def __post_init__(self):
        eps = float(self.eps)
        if not (eps > 0 and math.isfinite(eps)):
            raise ValueError(f"resolution must be positive and finite, got {self.eps}")
        c = np.asarray(self.cells)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if c.ndim != 2 or c.shape[0] == 0 or c.shape[1] == 0:
            raise ValueError("a cell set needs at least one cell of dimension >= 1")
        c = _unique_rows(c.astype(np.int64, copy=False))
        c.setflags(write=False)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "cells", c)

    # construction ----------------------------------------------------------

    @classmethod
    def from_points(cls, points, eps: float) -> "CellSet":
        """Cells containing the given points (no collar)."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if not np.all(np.isfinite(P)):
            raise ValueError("non-finite point coordinates")
        return cls(eps, np.floor(P / eps).astype(np.int64))

    @classmethod
    def from_box(cls, lo, hi, eps: float) -> "CellSet":
        """Every cell whose closed box meets the axis-aligned box ``[lo, hi]``."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("box needs lo <= hi of equal length")
        a = np.floor(lo / eps).astype(np.int64)
        b = np.maximum(a, np.ceil(hi / eps).astype(np.int64) - 1)
        axes = [np.arange(x, y + 1) for x, y in zip(a, b)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        return cls(eps, grid)

    @classmethod
    def ball(cls, radius: float, eps: float, dim: int, center=None) -> "CellSet":
        """Cells whose boxes meet the closed Euclidean ball."""
        center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        box = cls.from_box(center - radius, center + radius, eps)
        # distance from the center to the nearest point of each box
        lo = box.cells * eps
        near = np.clip(center, lo, lo + eps)
        keep = np.linalg.norm(near - center, axis=1) <= radius
        return cls(eps, box.cells[keep])

    # basic queries -----------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.cells.shape[1]

    def __len__(self) -> int:
        return self.cells.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellSet):
            return NotImplemented
        return self.eps == other.eps and np.array_equal(self.cells, other.cells)

    __hash__ = None

    @cached_property
    def centers(self) -> np.ndarray:
        c = (self.cells + 0.5) * self.eps
        c.setflags(write=False)
        return c

    @cached_property
    def _lookup(self):
        lo = self.cells.min(axis=0)
        hi = self.cells.max(axis=0)
        strides = _key_layout(lo, hi)
        if strides is None:
            return lo, hi, None, {row.tobytes(): k for k, row in enumerate(self.cells)}
        # C-order strides keep keys in the lexicographic order of the rows
        return lo, hi, strides, (self.cells - lo) @ strides

    def index_of(self, rows) -> np.ndarray:
        """Row positions of the given index rows in ``cells``; -1 where absent."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        lo, hi, strides, table = self._lookup
        inside = np.all((rows >= lo) & (rows <= hi), axis=1)
        out = np.full(rows.shape[0], -1, dtype=np.int64)
        if strides is None:
            for k in np.flatnonzero(inside):
                out[k] = table.get(rows[k].tobytes(), -1)
            return out
        keys = (rows[inside] - lo) @ strides
        pos = np.minimum(np.searchsorted(table, keys), table.size - 1)
        out[inside] = np.where(table[pos] == keys, pos, -1)
        return out

    def contains_cells(self, rows) -> np.ndarray:
        """Boolean mask: which index rows are cells of this set."""
        return self.index_of(rows) >= 0

    def union(self, other: "CellSet") -> "CellSet":
        if other.eps != self.eps or other.dim != self.dim:
            raise ValueError("union needs equal resolution and dimension")
        return CellSet(self.eps, np.vstack([self.cells, other.cells]))

    def dilate(self, radius: int) -> "CellSet":
        """Add every cell within Chebyshev index distance ``radius``."""
        if radius <= 0:
            return self
        return CellSet(self.eps, _dilate_rows(self.cells, radius))

    def box_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.cells.min(axis=0) * self.eps, (self.cells.max(axis=0) + 1) * self.eps

    # serialization -------------------------------------------------------------

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write("# ifsconn cellset v1\n")
        buf.write(f"dim {self.dim}\neps {self.eps!r}\ncount {len(self)}\n")
        for row in self.cells:
            buf.write(" ".join(str(int(v)) for v in row))
            buf.write("\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "CellSet":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        head = dict(ln.split(None, 1) for ln in lines[:3])
        dim, eps, count = int(head["dim"]), float(head["eps"]), int(head["count"])
        rows = np.array([[int(v) for v in ln.split()] for ln in lines[3:]], dtype=np.int64)
        if rows.shape != (count, dim):
            raise ValueError(f"cellset body has shape {rows.shape}, header says ({count}, {dim})")
        return cls(eps, rows)

    def to_bytes(self) -> bytes:
        head = _BINARY_MAGIC + struct.pack("<IdQ", self.dim, self.eps, len(self))
        return head + self.cells.astype("<i8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CellSet":
        if data[:8] != _BINARY_MAGIC:
            raise ValueError("not an ifsconn binary cellset")
        dim, eps, count = struct.unpack_from("<IdQ", data, 8)
        body = np.frombuffer(data, dtype="<i8", offset=8 + struct.calcsize("<IdQ"))
        return cls(eps, body.reshape(count, dim))


def _offsets(dim: int, radius: int) -> np.ndarray:
    r = range(-radius, radius + 1)
    return np.array(list(itertools.product(r, repeat=dim)), dtype=np.int64)


def _dilate_rows(rows: np.ndarray, radius: int) -> np.ndarray:
    off = _offsets(rows.shape[1], radius)
    return _unique_rows((rows[:, None, :] + off[None, :, :]).reshape(-1, rows.shape[1]))


# ---------------------------------------------------------------------------
# images under maps


def _stretch(m: AnyMap, s: float) -> float:
    """Bound on ``|m(x) - m(y)|`` when ``|x - y| <= s`` for one application of ``m``."""
    if m.block == 1:
        return float(m.modulus(s))
    aff = m.affine_part
    if aff is None:
        raise ValueError("single-step stretch of a block modulus is only known for affine bodies")
    return spectral_norm(aff.linear) * s


def collar_radius(m: AnyMap, eps: float, dim: int) -> int:
    """Cells of dilation that keep ``m(set) inside the image boxes``."""
    h = eps * math.sqrt(dim) / 2
    return int(math.ceil((_stretch(m, h) + h) / eps - 1e-12))


def _map_points(m: AnyMap, P: np.ndarray) -> np.ndarray:
    Y = np.asarray(m(P), dtype=float)
    if not np.all(np.isfinite(Y)):
        raise ValueError("map produced non-finite image points")
    return Y


def image_cellset(m: AnyMap, S: CellSet, collar: bool = True) -> CellSet:
    """Cover of ``m(boxes of S)`` at the resolution of ``S``.

    Each cell center is mapped and its image cell kept. With ``collar`` the
    result is dilated by :func:`collar_radius` cells, which makes it a true
    cover: any set inside the boxes of ``S`` maps inside the output boxes.
    Without the collar it is the snapped image of the centers.
    """
    Y = _map_points(m, S.centers)
    rows = np.floor(Y / S.eps).astype(np.int64)
    out = CellSet(S.eps, rows)
    if collar:
        out = out.dilate(collar_radius(m, S.eps, S.dim))
    return out


def hutchinson_step(f: AnyMap, gw: AnyMap, S: CellSet, collar: bool = True) -> CellSet:
    return image_cellset(f, S, collar).union(image_cellset(gw, S, collar))


# ---------------------------------------------------------------------------
# Hausdorff metric


def directed_excess(P, Q) -> float:
    """``sup_{p in P} inf_{q in Q} |p - q|``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    dist, _ = cKDTree(Q).query(P, k=1)
    return float(np.max(dist))


def hausdorff_points(P, Q) -> float:
    return max(directed_excess(P, Q), directed_excess(Q, P))


def hausdorff_distance(S1: CellSet, S2: CellSet) -> float:
    """Hausdorff distance between the cell-center sets of two covers.

    Against the underlying compact sets the value is accurate to
    ``(eps1 + eps2) * sqrt(d) / 2``.
    """
    if S1.dim != S2.dim:
        raise ValueError("cell sets live in different dimensions")
    return hausdorff_points(S1.centers, S2.centers)


def min_distance(P, Q) -> float:
    """Smallest distance between a point of ``P`` and a point of ``Q``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if len(P) > len(Q):
        P, Q = Q, P
    dist, _ = cKDTree(Q).query(P, k=1)
    return float(np.min(dist))


# ---------------------------------------------------------------------------
# attractors


@dataclass(frozen=True, eq=False)
class AttractorApprox:
    """Cell cover of an attractor with a Hausdorff error bound.

    ``points`` holds one orbit point per cell (row-aligned with
    ``cover.cells``). ``err`` bounds the Hausdorff distance between those
    points and the true attractor, so the cell centers are within
    ``err + eps*sqrt(d)/2``. ``certified`` is False when any modulus in the
    IFS is only sample-verified (named bodies).
    """

    cover: CellSet
    err: float
    ifs: tuple
    points: np.ndarray
    radius: float
    certified: bool
    rounds: int

    @property
    def eps(self) -> float:
        return self.cover.eps


def _word_maps(maps) -> list:
    block = max(m.block for m in maps)
    if block == 1:
        return list(maps)
    words = []
    for word in itertools.product(maps, repeat=block):
        words.append(_Word(word))
    return words


class _Word:
    """Composition ``word[0] o word[1] o ...``."""

    def __init__(self, word):
        self.word = tuple(word)
        mods = {m.modulus for m in word}
        self.modulus = next(iter(mods)) if len(mods) == 1 else combined_modulus(mods)
        self.block = 1

    def __call__(self, x):
        for m in reversed(self.word):
            x = m(x)
        return x


def bound_radius(words, phi: ContractionModulus, dim: int) -> float:
    """Radius of a closed ball about 0 mapped into itself by every map.

    Linear rates use ``(sum_i |m_i(0)| + 1) / (1 - alpha)``; tabulated moduli
    take the smallest doubling step ``M`` with ``phi(M) + max_i |m_i(0)| <= M``.
    """
    zero = np.zeros(dim)
    offs = [float(np.linalg.norm(w(zero))) for w in words]
    if phi.is_linear:
        return (sum(offs) + 1.0) / (1.0 - phi.alpha)
    need = max(offs)
    M = 1.0
    while M < 1e12:
        if float(phi(M)) + need <= M:
            return M
        M *= 2.0
    raise OverflowError("no invariant ball found for the tabulated modulus (seed ball overflow)")


def attractor_approx(f: AnyMap, gw: AnyMap, eps: float, tol: float = 0.0, *,
                     max_cells: int = 2_000_000, seeds=None) -> AttractorApprox:
    """Approximate the attractor of ``{f, gw}`` at resolution ``eps``."""
    return ifs_attractor([f, gw], eps, tol, max_cells=max_cells, seeds=seeds)


def ifs_attractor(maps, eps: float, tol: float = 0.0, *, max_cells: int = 2_000_000,
                  seeds=None) -> AttractorApprox:
    """Cell-orbit approximation of the attractor of a finite IFS.

    The iteration keeps one exact orbit point per occupied cell and maps only
    the newly reached cells each round, until no image lands in an unseen
    cell. Seeds default to the fixed point of the first map, which lies on
    the attractor; other seeds are first pushed by whole Hutchinson steps
    until their distance bound drops to ``tol``.

    With ``eta = eps*sqrt(d)`` and phi the common modulus, the stable cell
    set satisfies ``A within delta of the points`` for the least ``delta``
    with ``delta <= phi(delta) + eta`` (``eta/(1-alpha)`` for linear rates),
    and every point is within the seed bound of ``A``.
    """
    maps = list(maps)
    if eps <= 0 or tol < 0:
        raise ValueError("eps must be positive and tol nonnegative")
    dim = maps[0].dim
    if any(m.dim != dim for m in maps):
        raise ValueError("maps act on different dimensions")
    for m in maps:
        m.require_verified()
    words = _word_maps(maps)
    phi = combined_modulus([w.modulus for w in words])
    M = bound_radius(words, phi, dim)
    if not math.isfinite(M):
        raise OverflowError("seed ball radius is not finite")

    if seeds is None:
        head = words[0]
        e = fixed_point(maps[0]) if maps[0].block == 1 else _word_fixed_point(head, dim)
        res = float(np.linalg.norm(head(e) - e))
        seeds = e.reshape(1, dim)
        tau = phi.settle(res, 2 * M)
    else:
        seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
        tau = float(np.max(np.linalg.norm(seeds, axis=1))) + M

    P = seeds
    floor_tau = max(tol, 1e-9 * eps)
    steps = 0
    while tau > floor_tau and steps < 10_000:
        P = np.vstack([_map_points(w, P) for w in words])
        P = P[_first_per_cell(P, eps)]
        if len(P) > max_cells:
            raise BudgetExceeded(f"seed push grew past {max_cells} cells")
        tau = float(phi(tau))
        steps += 1

    R = max(M, float(np.max(np.linalg.norm(P, axis=1)))) + eps
    rows, pts, rounds = _cell_orbit(words, P, eps, R, max_cells)
    eta = eps * math.sqrt(dim)
    delta = phi.settle(eta, 2 * R)
    certified = all(m.is_affine and m.modulus.is_linear for m in maps)
    return AttractorApprox(CellSet(eps, rows), max(tau, delta), tuple(maps), pts, M, certified, rounds)


def _word_fixed_point(word, dim: int, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    x = np.zeros(dim)
    for _ in range(max_iter):
        y = np.asarray(word(x), dtype=float)
        if np.linalg.norm(y - x) <= tol:
            return y
        x = y
    return x


def _first_per_cell(P: np.ndarray, eps: float) -> np.ndarray:
    rows = np.floor(P / eps).astype(np.int64)
    if rows.shape[1] == 1:
        _, idx = np.unique(rows[:, 0], return_index=True)
    else:
        _, idx = np.unique(rows, axis=0, return_index=True)
    return np.sort(idx)


def _cell_orbit(words, P, eps, R, max_cells):
    dim = P.shape[1]
    P = P[_first_per_cell(P, eps)]
    lo = np.full(dim, int(math.floor(-R / eps)) - 1, dtype=np.int64)
    hi = np.full(dim, int(math.floor(R / eps)) + 1, dtype=np.int64)
    strides = _key_layout(lo, hi)

    rows = np.floor(P / eps).astype(np.int64)
    seen_rows = [rows]
    seen_pts = [P]
    frontier = P
    total = len(P)
    rounds = 0
    if strides is not None:
        seen_keys = np.sort((rows - lo) @ strides)
    else:
        seen_all = rows
    while len(frontier):
        rounds += 1
        Y = np.vstack([_map_points(w, frontier) for w in words])
        Y = Y[_first_per_cell(Y, eps)]
        yr = np.floor(Y / eps).astype(np.int64)
        if np.any(yr < lo) or np.any(yr > hi):
            raise OverflowError("orbit left the invariant ball; the modulus claim is wrong")
        if strides is not None:
            keys = (yr - lo) @ strides
            new = ~np.isin(keys, seen_keys, assume_unique=True)
            seen_keys = np.union1d(seen_keys, keys[new])
        else:
            both = np.vstack([seen_all, yr])
            _, inv = np.unique(both, axis=0, return_inverse=True)
            inv = inv.ravel()
            old = np.zeros(inv.max() + 1, dtype=bool)
            old[inv[: len(seen_all)]] = True
            new = ~old[inv[len(seen_all):]]
            seen_all = np.vstack([seen_all, yr[new]])
        frontier = Y[new]
        total += len(frontier)
        if total > max_cells:
            raise BudgetExceeded(f"attractor cover grew past {max_cells} cells at eps={eps:g}")
        seen_rows.append(yr[new])
        seen_pts.append(frontier)
    rows = np.vstack(seen_rows)
    pts = np.vstack(seen_pts)
    order = np.lexsort(rows.T[::-1])
    return rows[order], pts[order], rounds


# ---------------------------------------------------------------------------
# chaos game


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.points) == 0:
            raise ValueError("point cloud is empty")

    def to_csv(self) -> str:
        d = self.points.shape[1]
        lines = [",".join(f"x{k}" for k in range(d))]
        lines.extend(",".join(repr(float(v)) for v in row) for row in self.points)
        return "\n".join(lines) + "\n"


BURN_IN = 64


def chaos_game(f: AnyMap, gw: AnyMap, N: int, seed: int) -> PointCloud:
    """Random orbit started at the fixed point of ``f``; the first 64 points are dropped."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    flips = rng.integers(0, 2, N + BURN_IN)
    x = fixed_point(f)
    out = np.empty((N, f.dim))
    fa, ga = f.affine_part, gw.affine_part
    if fa is not None and ga is not None:
        Ls = (fa.linear, ga.linear)
        bs = (fa.offset, ga.offset)
        for k, c in enumerate(flips):
            x = Ls[c] @ x + bs[c]
            if k >= BURN_IN:
                out[k - BURN_IN] = x
    else:
        maps = (f, gw)
        for k, c in enumerate(flips):
            x = np.asarray(maps[c](x), dtype=float)
            if k >= BURN_IN:
                out[k - BURN_IN] = x
    return PointCloud(out, seed)
