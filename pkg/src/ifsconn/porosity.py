"""Finite-dimensional probes of how small the connectedness set is.

``dimension_scan`` estimates, for a family of affine pairs indexed by the
dimension ``d``, the fraction of translations in a ball that give a
connected attractor. ``strong_porosity_probe`` looks for holes of a given
relative size next to a point of a sampled set, and ``continuity_probe``
measures how fast attractors move with the translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .connectivity import Class, Policy, classify
from .mandelbrot import classify_points, sphere_covers
from .maps import ContractionMap, TranslatedMap, as_vector
from .sets import attractor_approx, hausdorff_points

# the Minkowski-difference containment check is only run in low dimension
SPHERE_CHECK_MAX_DIM = 2


@dataclass(frozen=True)
class TruncationFamily:
    """Rule producing an affine pair ``(f_d, g_d)`` for each dimension ``d``.

    ``kind="decaying"``: ``f_d = diag(c*lam, c*lam**2, ..., c*lam**d)`` and
    ``g_d = beta*I``. ``kind="scalar"``: ``f_d = a*I`` and ``g_d = b*I``.
    """

    dims: tuple
    kind: str = "decaying"
    params: dict = field(default_factory=lambda: {"c": 0.9, "lam": 0.8, "beta": 0.45})

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or min(self.dims) < 1:
            raise ValueError("dims must be positive integers")
        if self.kind == "decaying":
            need = {"c", "lam", "beta"}
        elif self.kind == "scalar":
            need = {"a", "b"}
        else:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if set(self.params) != need:
            raise ValueError(f"{self.kind} family needs parameters {sorted(need)}")
        if not all(0 < abs(v) < 1 for v in self.params.values()):
            raise ValueError("family parameters must lie in (0, 1) in absolute value")

    @classmethod
    def default(cls, dims=(2, 4, 8), c: float = 0.9, lam: float = 0.8, beta: float = 0.45):
        return cls(tuple(dims), "decaying", {"c": c, "lam": lam, "beta": beta})

    @classmethod
    def scalar(cls, dims, a: float, b: float):
        return cls(tuple(dims), "scalar", {"a": a, "b": b})

    def pair(self, d: int) -> tuple[ContractionMap, ContractionMap]:
        p = self.params
        if self.kind == "decaying":
            f = np.diag(p["c"] * p["lam"] ** np.arange(1, d + 1))
            g = p["beta"] * np.eye(d)
        else:
            f = p["a"] * np.eye(d)
            g = p["b"] * np.eye(d)
        return ContractionMap.affine(f), ContractionMap.affine(g)

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "kind": self.kind, "params": dict(self.params)}


def sample_ball(rng: np.random.Generator, n: int, d: int, R: float) -> np.ndarray:
    """``n`` uniform samples from the closed ball of radius ``R`` in ``R^d``."""
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = R * rng.random(n) ** (1.0 / d)
    return u * r[:, None]


@dataclass
class ScanRow:
    d: int
    samples: int
    connected: int
    disconnected: int
    unknown: int
    bound_violations: int
    sphere_violations: int
    sphere_checked: int

    @property
    def fraction(self) -> float:
        decided = self.connected + self.disconnected
        return self.connected / decided if decided else math.nan

    @property
    def unknown_rate(self) -> float:
        return self.unknown / self.samples


@dataclass
class ScanTable:
    rows: list
    family: dict
    R: float
    seed: int
    policy: dict

    def fractions(self) -> dict:
        return {r.d: r.fraction for r in self.rows}

    def to_csv(self) -> str:
        lines = ["d,samples,connected,disconnected,unknown,fraction"]
        for r in self.rows:
            lines.append(f"{r.d},{r.samples},{r.connected},{r.disconnected},{r.unknown},{r.fraction!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "R": self.R,
            "seed": self.seed,
            "policy": self.policy,
            "rows": [dict(vars(r), fraction=r.fraction, unknown_rate=r.unknown_rate) for r in self.rows],
        }


def dimension_scan(fam: TruncationFamily, R: float, samples: int, seed: int,
                   policy: Policy | None = None, workers: int = 1) -> ScanTable:
    """Connected fraction of uniform translations in ``B(0, R)`` for each dimension.

    Pairs with zero offsets satisfy ``t * A_w = A_{tw}``, so each sample is
    classified through its unit direction; the attractor of ``w`` is the
    attractor of ``w/|w|`` scaled by ``|w|``. Every sample also checks that
    its unit-direction attractor lies in the ball of radius ``1/(1-alpha)``
    (one cell of slack), and in dimension <= 2 that CONNECTED directions lie
    in the difference of the covers of ``f`` and ``g`` of that ball.
    """
    if samples < 100:
        raise ValueError("samples must be at least 100")
    if R <= 0:
        raise ValueError("R must be positive")
    policy = policy or Policy()
    rows = []
    for d in fam.dims:
        f, g = fam.pair(d)
        rng = np.random.default_rng(np.random.SeedSequence([seed, d]))
        W = sample_ball(rng, samples, d, R)
        norms = np.linalg.norm(W, axis=1)
        U = np.where(norms[:, None] > 0, W / np.where(norms > 0, norms, 1.0)[:, None], W)
        verdicts = classify_points(f, g, U, policy, workers)
        alpha = max(f.modulus.alpha, g.modulus.alpha)
        slack = policy.finest * math.sqrt(d)
        tally = {c: 0 for c in Class}
        bound_bad = 0
        sphere_bad = 0
        sphere_n = 0
        covers = None
        for u, r, v in zip(U, norms, verdicts):
            tally[v.cls] += 1
            # the unit-direction attractor must sit in the ball of radius 1/(1-alpha)
            if math.isfinite(v.extent) and v.extent > 1.0 / (1.0 - alpha) + slack:
                bound_bad += 1
            if v.cls is Class.CONNECTED and d <= SPHERE_CHECK_MAX_DIM and r > 0:
                sphere_n += 1
                if covers is None:
                    covers = sphere_covers(f, g, 1.0 / (1.0 - alpha), policy.eps0)
                if not covers.contains(u):
                    sphere_bad += 1
        rows.append(ScanRow(d, samples, tally[Class.CONNECTED], tally[Class.DISCONNECTED],
                            tally[Class.UNKNOWN], bound_bad, sphere_bad, sphere_n))
    return ScanTable(rows, fam.to_dict(), R, seed, policy.to_dict())


@dataclass(frozen=True)
class PorosityWitness:
    y: np.ndarray | None
    trials: int

    @property
    def found(self) -> bool:
        return self.y is not None


def strong_porosity_probe(M, x, R: float, alpha: float, trials: int, seed: int) -> PorosityWitness:
    """Random search for ``y`` with ``|x - y| = R`` and ``B(y, alpha*R)`` free of ``M``.

    Returns the first witness found, or a witness with ``y=None`` after
    ``trials`` failed directions.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if R <= 0 or trials < 1:
        raise ValueError("R must be positive and trials at least 1")
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.size
    M = np.asarray(M, dtype=float).reshape(-1, d) if np.size(M) else np.zeros((0, d))
    rng = np.random.default_rng(seed)
    tree = cKDTree(M) if len(M) else None
    for k in range(1, trials + 1):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        y = x + R * u
        if tree is None or tree.query(y, k=1)[0] >= alpha * R:
            return PorosityWitness(y, k)
    return PorosityWitness(None, trials)


@dataclass(frozen=True)
class ContinuityReport:
    worst_ratio: float
    bound: float
    ratios: tuple

    @property
    def ok(self) -> bool:
        return self.worst_ratio <= self.bound


def continuity_probe(f: ContractionMap, g: ContractionMap, pairs, eps: float) -> ContinuityReport:
    """Worst ``H(A_w, A_w') / |w - w'|`` over the given translation pairs.

    The bound returned is ``1/(1-alpha) + 2(err + eps*sqrt(d)) / min|w - w'|``.
    """
    if not (f.modulus.is_linear and g.modulus.is_linear):
        raise ValueError("continuity probe needs linear contraction rates")
    alpha = max(f.modulus.alpha, g.modulus.alpha)
    d = g.dim
    ratios = []
    steps = []
    err = 0.0
    for w, w2 in pairs:
        w = as_vector(w, d)
        w2 = as_vector(w2, d)
        step = float(np.linalg.norm(w - w2))
        if step == 0:
            raise ValueError("pairs must have distinct translations")
        A1 = attractor_approx(f, TranslatedMap(g, w), eps)
        A2 = attractor_approx(f, TranslatedMap(g, w2), eps)
        err = max(err, A1.err, A2.err)
        ratios.append(hausdorff_points(A1.cover.centers, A2.cover.centers) / step)
        steps.append(step)
    if not ratios:
        raise ValueError("no pairs given")
    bound = 1.0 / (1.0 - alpha) + 2 * (err + eps * math.sqrt(d)) / min(steps)
    return ContinuityReport(max(ratios), bound, tuple(ratios))
