"""Contraction self-maps of R^d.

A map has a body, either an :class:`AffineMap` (``x -> Lx + b``) or the name
of a vectorised function in the body registry, plus a
:class:`ContractionModulus` bounding how much it shrinks distances. Attractor
routines only accept maps whose modulus survives :func:`matkowski_verify`.

All map objects are immutable and safe to share between threads and worker
processes (named bodies are looked up at call time, so they pickle by name).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

#: depth of the phi-iterate decay check
ITERATE_DEPTH = 64
#: absolute slack used by every modulus inequality check
SLACK = 1e-12
#: sample budget used when a map verifies itself lazily
DEFAULT_VERIFY_SAMPLES = 2000


class ConvergenceError(RuntimeError):
    """Banach iteration exhausted its budget before reaching the tolerance."""


class UnverifiedMapError(ValueError):
    """A map's claimed modulus failed verification."""


def as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D coordinate array, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# affine bodies


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> linear @ x + offset``. Accepts single vectors or ``(n, d)`` batches."""

    linear: np.ndarray
    offset: np.ndarray | None = None

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.linear, dtype=float))
        d = L.shape[0]
        if L.shape != (d, d):
            raise ValueError(f"linear part must be square, got shape {L.shape}")
        if not np.all(np.isfinite(L)):
            raise ValueError("linear part has non-finite entries")
        b = np.zeros(d) if self.offset is None else as_vector(self.offset, d)
        object.__setattr__(self, "linear", _frozen(L))
        object.__setattr__(self, "offset", _frozen(b))

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    @property
    def is_linear(self) -> bool:
        return not np.any(self.offset)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.linear.T + self.offset

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """Return ``self o inner``."""
        return AffineMap(self.linear @ inner.linear, self.linear @ inner.offset + self.offset)

    def translate(self, w) -> "AffineMap":
        return AffineMap(self.linear, self.offset + as_vector(w, self.dim))

    def power(self, n: int) -> "AffineMap":
        out = AffineMap(np.eye(self.dim))
        for _ in range(n):
            out = self.compose(out)
        return out

    def to_dict(self) -> dict:
        return {"type": "affine", "matrix": self.linear.tolist(), "offset": self.offset.tolist()}


# ---------------------------------------------------------------------------
# named nonlinear bodies

_BODIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {}


def register_body(name: str):
    """Decorator registering a vectorised body ``(..., d) -> (..., d)`` under ``name``."""

    def deco(fn):
        _BODIES[name] = fn
        return fn

    return deco


def get_body(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return _BODIES[name]
    except KeyError:
        raise KeyError(f"unknown map body {name!r}; registered: {sorted(_BODIES)}") from None


def registered_bodies() -> list[str]:
    return sorted(_BODIES)


@register_body("half_sin")
def _half_sin(x):
    return 0.5 * np.sin(x)


@register_body("soft_saturation")
def _soft_saturation(x):
    # coordinatewise x / (1 + |x|)
    return x / (1.0 + np.abs(x))


# ---------------------------------------------------------------------------
# moduli


@dataclass(frozen=True)
class ContractionModulus:
    """A comparison function phi with ``|m(x) - m(y)| <= phi(|x - y|)``.

    ``kind="linear"`` is phi(t) = alpha * t. ``kind="tabulated"`` is the
    monotone cubic (PCHIP) interpolant of the ``(t, phi)`` samples, pinned to
    (0, 0) on the left and extended with slope one on the right (the most
    conservative extension that keeps phi(t) < t). Straight chords would
    undercut a concave phi between samples; the cubic follows it closely.
    """

    kind: str
    alpha: float = 0.0
    t: tuple = ()
    phi: tuple = ()

    def __post_init__(self):
        if self.kind == "linear":
            a = float(self.alpha)
            if not (0.0 <= a < 1.0):
                raise ValueError(f"linear-rate modulus needs 0 <= alpha < 1, got {a}")
            object.__setattr__(self, "alpha", a)
        elif self.kind == "tabulated":
            t = np.asarray(self.t, dtype=float)
            p = np.asarray(self.phi, dtype=float)
            if t.ndim != 1 or t.shape != p.shape or t.size < 2:
                raise ValueError("tabulated modulus needs matching 1-D t/phi arrays of length >= 2")
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
                raise ValueError("tabulated modulus has non-finite samples")
            if t[0] < 0 or np.any(np.diff(t) <= 0):
                raise ValueError("tabulated t grid must be nonnegative and strictly increasing")
            if np.any(p < 0) or np.any(np.diff(p) < 0):
                raise ValueError("tabulated phi must be nonnegative and nondecreasing")
            object.__setattr__(self, "t", tuple(t.tolist()))
            object.__setattr__(self, "phi", tuple(p.tolist()))
        else:
            raise ValueError(f"unknown modulus kind {self.kind!r}")

    @classmethod
    def linear(cls, alpha: float) -> "ContractionModulus":
        return cls("linear", alpha=alpha)

    @classmethod
    def tabulated(cls, t, phi) -> "ContractionModulus":
        return cls("tabulated", t=tuple(np.asarray(t, float)), phi=tuple(np.asarray(phi, float)))

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return self.alpha * s
        t_end, p_end = self.t[-1], self.phi[-1]
        out = self._interpolant(np.minimum(np.maximum(s, 0.0), t_end))
        beyond = s > t_end
        if np.any(beyond):
            out = np.where(beyond, p_end + (s - t_end), out)
        return out

    @cached_property
    def _interpolant(self):
        t = np.asarray(self.t)
        p = np.asarray(self.phi)
        if t[0] > 0:
            t = np.concatenate([[0.0], t])
            p = np.concatenate([[0.0], p])
        return PchipInterpolator(t, p, extrapolate=False)

    def check_grid(self) -> np.ndarray:
        base = np.logspace(-6, 3, 64)
        if self.kind == "linear":
            return base
        t = np.asarray(self.t)
        return np.unique(np.concatenate([t[t > 0], base[base <= 2 * t[-1]]]))

    def iterates_vanish(self, grid=None, depth: int = ITERATE_DEPTH) -> bool:
        """Numerical check that phi^(n)(t) -> 0 along ``grid``.

        Every iterate still above the slack must strictly drop in relative
        terms, so phi(t) = t is rejected while slow decays such as
        t / (1 + t) pass.
        """
        grid = self.check_grid() if grid is None else np.asarray(grid, dtype=float)
        v = grid[grid > SLACK]
        for _ in range(depth):
            nxt = np.asarray(self(v))
            stuck = (nxt > SLACK) & (nxt >= v * (1.0 - 1e-14))
            if np.any(stuck):
                return False
            v = nxt
        return True

    def settle(self, eta: float, start: float) -> float:
        """Smallest computable bound on any d <= start with d <= phi(d) + eta."""
        if self.kind == "linear":
            return min(start, eta / (1.0 - self.alpha)) if self.alpha < 1 else start
        t = float(start)
        for _ in range(1_000_000):
            nxt = min(t, float(self(t)) + eta)
            if nxt >= t - 1e-15 * max(1.0, t):
                return nxt
            t = nxt
        return t

    def to_dict(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear", "alpha": self.alpha}
        return {"kind": "tabulated", "t": list(self.t), "phi": list(self.phi)}


def combined_modulus(mods) -> ContractionModulus:
    """Pointwise max of several moduli (the modulus of their Hutchinson operator)."""
    mods = list(mods)
    if all(m.is_linear for m in mods):
        return ContractionModulus.linear(max(m.alpha for m in mods))
    grid = np.unique(np.concatenate([m.check_grid() for m in mods]))
    phi = np.max([m(grid) for m in mods], axis=0)
    return ContractionModulus.tabulated(grid, np.maximum.accumulate(phi))


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class MatkowskiReport:
    passed: bool
    worst_violation: float
    iterates_ok: bool
    samples: int


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    certified: bool


@dataclass(frozen=True, eq=False)
class ContractionMap:
    """A contraction with a claimed modulus.

    ``block > 1`` means the modulus bounds the ``block``-fold composition
    rather than the map itself (used for self-affine tiles whose inverse
    matrix only contracts after a few steps).
    """

    body: Union[AffineMap, str]
    modulus: ContractionModulus
    dim: int | None = None
    block: int = 1

    def __post_init__(self):
        if isinstance(self.body, AffineMap):
            if self.dim is not None and self.dim != self.body.dim:
                raise ValueError(f"dim={self.dim} disagrees with affine body of dim {self.body.dim}")
            object.__setattr__(self, "dim", self.body.dim)
        elif isinstance(self.body, str):
            try:
                get_body(self.body)
            except KeyError as exc:
                raise ValueError(exc.args[0]) from None
            if self.dim is None or self.dim < 1:
                raise ValueError("named bodies need an explicit dim >= 1")
        else:
            raise TypeError("body must be an AffineMap or a registered body name")
        if self.block < 1:
            raise ValueError("block must be >= 1")

    @classmethod
    def affine(cls, matrix, offset=None, alpha: float | None = None, block: int = 1) -> "ContractionMap":
        """Affine contraction; ``alpha`` defaults to the spectral norm of ``matrix``."""
        A = AffineMap(matrix, offset)
        if alpha is None:
            alpha = spectral_norm(np.linalg.matrix_power(A.linear, block))
            if alpha >= 1.0:
                raise ValueError(f"linear part has norm {alpha:.6g} >= 1; not a Banach contraction")
        return cls(A, ContractionModulus.linear(alpha), block=block)

    @property
    def is_affine(self) -> bool:
        return isinstance(self.body, AffineMap)

    @property
    def affine_part(self) -> AffineMap | None:
        return self.body if self.is_affine else None

    @property
    def shift(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def base(self) -> "ContractionMap":
        return self

    def __call__(self, x):
        if self.is_affine:
            return self.body(x)
        return get_body(self.body)(np.asarray(x, dtype=float))

    def translated(self, w) -> "TranslatedMap":
        return TranslatedMap(self, w)

    @cached_property
    def verification(self) -> MatkowskiReport:
        return matkowski_verify(self, DEFAULT_VERIFY_SAMPLES, seed=0)

    def require_verified(self) -> None:
        rep = self.verification
        if not rep.passed:
            raise UnverifiedMapError(
                f"claimed modulus failed verification (worst violation {rep.worst_violation:.3g}, "
                f"iterates_ok={rep.iterates_ok})"
            )

    def to_dict(self) -> dict:
        if self.is_affine:
            out = self.body.to_dict()
        else:
            out = {"type": "builtin", "name": self.body, "dim": self.dim}
        out["modulus"] = self.modulus.to_dict()
        if self.block != 1:
            out["block"] = self.block
        return out


@dataclass(frozen=True, eq=False)
class TranslatedMap:
    """``g_w(x) = g(x) + w``; shares the modulus of ``base``."""

    base: ContractionMap
    shift: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shift", _frozen(as_vector(self.shift, self.base.dim)))

    modulus = property(lambda self: self.base.modulus)
    dim = property(lambda self: self.base.dim)
    block = property(lambda self: self.base.block)
    is_affine = property(lambda self: self.base.is_affine)
    verification = property(lambda self: self.base.verification)

    @property
    def affine_part(self) -> AffineMap | None:
        a = self.base.affine_part
        return None if a is None else a.translate(self.shift)

    def __call__(self, x):
        return self.base(x) + self.shift

    def require_verified(self) -> None:
        self.base.require_verified()

    def to_dict(self) -> dict:
        return {"base": self.base.to_dict(), "shift": self.shift.tolist()}


AnyMap = Union[ContractionMap, TranslatedMap]


def block_apply(m: AnyMap, x):
    """Apply ``m`` ``m.block`` times."""
    for _ in range(m.block):
        x = m(x)
    return x


def apply_map(m: AnyMap, x) -> np.ndarray:
    x = as_vector(x, m.dim)
    y = np.asarray(m(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("map produced non-finite output")
    return y


def fixed_point(m: AnyMap, tol: float = 1e-12, max_iter: int = 100_000, direct: bool = False) -> np.ndarray:
    """Fixed point of ``m`` by Banach iteration from the origin.

    With ``direct=True`` and an affine body whose linear part has norm < 1 the
    point is obtained by solving ``(I - L) x = b`` instead.

    Raises:
        ConvergenceError: the residual never dropped to ``tol`` within
            ``max_iter`` steps, which points at a wrong modulus claim.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m.require_verified()
    aff = m.affine_part
    if direct and aff is not None and spectral_norm(aff.linear) < 1:
        return np.linalg.solve(np.eye(m.dim) - aff.linear, aff.offset)
    x = np.zeros(m.dim)
    res = math.inf
    for _ in range(max_iter):
        y = np.asarray(m(x), dtype=float)
        res = float(np.linalg.norm(y - x))
        if res <= tol:
            # |m(y) - y| <= phi(|y - x|) <= tol
            return y
        x = y
    raise ConvergenceError(f"fixed-point iteration stalled at residual {res:.3g} after {max_iter} steps")


def spectral_norm(L, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value of ``L`` by power iteration on ``L.T @ L``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    M = L.T @ L
    if not np.any(M):
        return 0.0
    v = np.random.default_rng(0).standard_normal(M.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        u = M @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            break
        new = float(v @ u)
        v = u / nu
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    # the final Rayleigh quotient uses the last, best-aligned vector
    lam = max(lam, float(v @ (M @ v)))
    return math.sqrt(max(lam, 0.0))


def lipschitz_upper(m: AnyMap, samples: int = 4096, seed: int = 0, box: float = 10.0) -> LipschitzEstimate:
    """Lipschitz constant of ``m``.

    Affine bodies get the spectral norm of their linear part (certified).
    Named bodies get the largest difference quotient over random pairs in
    ``[-box, box]^d``; half of the pairs are close together so that local
    slopes are probed. That number is a lower estimate and is flagged so.
    """
    aff = m.affine_part
    if aff is not None:
        return LipschitzEstimate(spectral_norm(aff.linear), True)
    rng = np.random.default_rng(seed)
    d = m.dim
    X = rng.uniform(-box, box, (samples, d))
    Y = rng.uniform(-box, box, (samples, d))
    half = samples // 2
    step = 10.0 ** rng.uniform(-6, 0, (half, 1)) * rng.standard_normal((half, d))
    Y[:half] = X[:half] + step
    num = np.linalg.norm(m(X) - m(Y), axis=1)
    den = np.linalg.norm(X - Y, axis=1)
    ok = den > 0
    return LipschitzEstimate(float(np.max(num[ok] / den[ok])), False)


def matkowski_verify(m: AnyMap, samples: int, seed: int, box=(-10.0, 10.0)) -> MatkowskiReport:
    """Sample-check ``|m(x) - m(y)| <= phi(|x - y|)`` and the decay of phi's iterates.

    Pairs are drawn from ``box^d`` (half of them close together). For
    ``block > 1`` the block composition is checked. Affine bodies with a
    linear-rate modulus are additionally checked exactly against the spectral
    norm. Violations are returned as data.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lo, hi = float(box[0]), float(box[1])
    rng = np.random.default_rng(seed)
    d = m.dim
    X = rng.uniform(lo, hi, (samples, d))
    Y = rng.uniform(lo, hi, (samples, d))
    half = samples // 2
    step = (hi - lo) * 10.0 ** rng.uniform(-7, -1, (half, 1)) * rng.standard_normal((half, d))
    Y[:half] = np.clip(X[:half] + step, lo, hi)
    gap_in = np.linalg.norm(X - Y, axis=1)
    gap_out = np.linalg.norm(block_apply(m, X) - block_apply(m, Y), axis=1)
    worst = float(np.max(gap_out - m.modulus(gap_in)))
    aff = m.affine_part
    if aff is not None and m.modulus.is_linear:
        exact = spectral_norm(np.linalg.matrix_power(aff.linear, m.block)) - m.modulus.alpha
        worst = max(worst, exact)
    iterates_ok = m.modulus.iterates_vanish()
    return MatkowskiReport(worst <= SLACK and iterates_ok, worst, iterates_ok, samples)


def _linear_matrix(g) -> np.ndarray:
    if isinstance(g, AffineMap):
        if not g.is_linear:
            raise ValueError("expected a linear map (zero offset)")
        return g.linear
    if isinstance(g, ContractionMap):
        if not g.is_affine:
            raise ValueError("expected an affine map")
        return _linear_matrix(g.body)
    return np.atleast_2d(np.asarray(g, dtype=float))


def partial_sum_map(g, n: int, w) -> np.ndarray:
    """``h(w) = sum_{i<n} L^i w`` by direct accumulation.

    ``w`` may be a single vector or an ``(k, d)`` batch.
    """
    L = _linear_matrix(g)
    if n < 1:
        raise ValueError("n must be >= 1")
    term = np.asarray(w, dtype=float)
    acc = term.copy()
    for _ in range(n - 1):
        term = term @ L.T
        acc = acc + term
    return acc


def partial_sum_closed_form(g, n: int, w) -> np.ndarray:
    """``h(w) = (I - L^n)(I - L)^{-1} w``; agrees with :func:`partial_sum_map`."""
    L = _linear_matrix(g)
    if n < 1:
        raise ValueError("n must be >= 1")
    d = L.shape[0]
    W = np.atleast_2d(np.asarray(w, dtype=float))
    try:
        y = np.linalg.solve(np.eye(d) - L, W.T)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"(I - L) could not be inverted: {exc}") from exc
    out = (y - np.linalg.matrix_power(L, n) @ y).T
    return out.reshape(np.shape(w)) if np.ndim(w) == 1 else out
