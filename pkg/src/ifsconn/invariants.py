"""Self-check suite run by ``ifsconn verify``.

Each check draws a small random batch, tests one structural property of the
library, and reports the worst slack it saw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connectivity import Class, Policy, classify, decomposition_check
from .mandelbrot import ParamWindow, covering_upper_bound, mset_compute, mset_direct, scaling_reduce, sweep
from .maps import ContractionMap, TranslatedMap, partial_sum_closed_form, partial_sum_map
from .porosity import continuity_probe
from .sets import CellSet, attractor_approx, hausdorff_distance, hutchinson_step


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def random_linear(rng: np.random.Generator, d: int, alpha: float) -> ContractionMap:
    """Random ``d x d`` linear contraction with spectral norm ``alpha``."""
    L = rng.standard_normal((d, d))
    L *= alpha / np.linalg.norm(L, 2)
    return ContractionMap.affine(L)


def random_cellset(rng: np.random.Generator, eps: float, d: int, n: int, span: int = 64) -> CellSet:
    lo = rng.integers(-span, span, size=d)
    return CellSet(eps, lo + rng.integers(0, span, size=(n, d)))


def check_hausdorff_metric(rng, trials: int) -> CheckResult:
    worst = -math.inf
    for _ in range(trials):
        A, B, C = (random_cellset(rng, 1 / 32, 2, int(rng.integers(1, 40))) for _ in range(3))
        ab, bc, ac = hausdorff_distance(A, B), hausdorff_distance(B, C), hausdorff_distance(A, C)
        worst = max(worst, ac - ab - bc, abs(ab - hausdorff_distance(B, A)), hausdorff_distance(A, A))
    return CheckResult("hausdorff_metric", worst <= 1e-12, f"worst triangle/symmetry slack {worst:.3g}")


def check_hutchinson_contraction(rng, trials: int) -> CheckResult:
    eps, d = 1 / 64, 2
    worst = -math.inf
    for _ in range(trials):
        alpha = float(rng.uniform(0.1, 0.9))
        f = random_linear(rng, d, alpha)
        g = TranslatedMap(random_linear(rng, d, alpha), rng.uniform(-1, 1, d))
        D = random_cellset(rng, eps, d, int(rng.integers(1, 60)))
        G = random_cellset(rng, eps, d, int(rng.integers(1, 60)))
        lhs = hausdorff_distance(hutchinson_step(f, g, D, collar=False), hutchinson_step(f, g, G, collar=False))
        rhs = alpha * hausdorff_distance(D, G) + 2 * eps * math.sqrt(d)
        worst = max(worst, lhs - rhs)
    return CheckResult("hutchinson_contraction", worst <= 1e-12, f"worst excess {worst:.3g}")


def check_partial_sum(rng, trials: int) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 6))
        L = rng.standard_normal((d, d))
        L *= rng.uniform(0.0, 0.9) / max(np.linalg.norm(L, 2), 1e-300)
        n = int(rng.integers(1, 21))
        w = rng.standard_normal(d)
        a, b = partial_sum_map(L, n, w), partial_sum_closed_form(L, n, w)
        worst = max(worst, float(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-300)))
    return CheckResult("partial_sum_identity", worst <= 1e-10, f"worst relative error {worst:.3g}")


def check_decomposition() -> CheckResult:
    eps = 1 / 1024
    h = ContractionMap.affine([[0.5]])
    gw = TranslatedMap(h, [0.5])
    A = attractor_approx(h, gw, eps)
    res = decomposition_check(h, gw, A, 10)
    bad = [n for n, r in enumerate(res, start=1) if r > 2.0**-n + 3 * eps]
    return CheckResult("decomposition", not bad, f"residuals {[round(r, 6) for r in res]}")


def check_scaling(rng, trials: int) -> CheckResult:
    h = ContractionMap.affine([[0.5]])
    worst = -math.inf
    for _ in range(trials):
        t = float(rng.uniform(-4, 4)) or 1.0
        r = scaling_reduce(h, h, [rng.uniform(-2, 2)], t, 1 / 256)
        worst = max(worst, r.residual - r.bound)
    return CheckResult("scaling", worst <= 0, f"worst residual minus bound {worst:.3g}")


def check_ball_bound(rng, trials: int) -> CheckResult:
    eps = 1 / 64
    worst = -math.inf
    for _ in range(trials):
        d = int(rng.integers(1, 3))
        alpha = float(rng.uniform(0.2, 0.7))
        f, g = random_linear(rng, d, alpha), random_linear(rng, d, alpha)
        w = rng.standard_normal(d)
        w /= np.linalg.norm(w)
        A = attractor_approx(f, TranslatedMap(g, w), eps)
        far = float(np.max(np.linalg.norm(A.cover.centers, axis=1)))
        worst = max(worst, far - (1 / (1 - alpha) + eps * math.sqrt(d)))
    return CheckResult("ball_bound", worst <= 0, f"worst overshoot {worst:.3g}")


def check_fastpath_consistency() -> CheckResult:
    h = ContractionMap.affine([[0.5]])
    r = sweep(h, h, ParamWindow.interval(-2, 2, 17), Policy(1 / 128, 3), fastpath=False)
    n = r.counts()[Class.DISCONNECTED.value]
    return CheckResult("fastpath_consistency", n == 0, f"{n} DISCONNECTED pixels with the fast path off")


def check_mset_agreement() -> CheckResult:
    h = ContractionMap.affine([[0.5]])
    D = CellSet.from_box([0.0], [1.0], 1 / 512)
    win = ParamWindow.interval(-2, 2, 201)
    worst = 1.0
    for n in (1, 2):
        a = mset_compute(h, n, D, win).member
        b = mset_direct(h, n, D, win).member
        worst = min(worst, float(np.mean(a == b)))
    return CheckResult("mset_agreement", worst >= 0.99, f"lowest agreement {worst:.4f}")


def check_covering() -> CheckResult:
    win = ParamWindow.interval(-2, 2, 33)
    missed = 0
    for rate in (0.5, 1 / 3):
        m = ContractionMap.affine([[rate]])
        r = sweep(m, m, win, Policy(1 / 128, 3), fastpath=False)
        cov = covering_upper_bound(m, m, 2.0, 12, win, 1 / 128)
        conn = np.array([v.cls is Class.CONNECTED for v in r.verdicts])
        missed += int(np.count_nonzero(conn & ~cov.member.reshape(-1)))
    return CheckResult("covering_soundness", missed == 0, f"{missed} CONNECTED pixels left unmarked")


def check_continuity(rng, trials: int) -> CheckResult:
    ok = True
    worst = 0.0
    for rate in (0.5, 1 / 3):
        m = ContractionMap.affine([[rate]])
        pairs = []
        for _ in range(trials):
            w = float(rng.uniform(-2, 2))
            pairs.append((w, w + float(rng.choice([-1, 1])) * float(rng.uniform(0.05, 1))))
        rep = continuity_probe(m, m, pairs, 1 / 256)
        ok &= rep.ok
        worst = max(worst, rep.worst_ratio)
    return CheckResult("continuity", ok, f"worst ratio {worst:.4f}")


def check_determinism() -> CheckResult:
    h = ContractionMap.affine([[1 / 3]])
    a = classify(h, h, [0.3], Policy(1 / 128, 3))
    b = classify(h, h, [0.3], Policy(1 / 128, 3))
    return CheckResult("determinism", a == b, f"verdict {a.cls.value}")


def run_suite(seed: int = 0, quick: bool = False) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    n = 10 if quick else 50
    return [
        check_hausdorff_metric(rng, n),
        check_hutchinson_contraction(rng, n),
        check_partial_sum(rng, 2 * n),
        check_decomposition(),
        check_scaling(rng, max(3, n // 5)),
        check_ball_bound(rng, n // 2),
        check_fastpath_consistency(),
        check_mset_agreement(),
        check_covering(),
        check_continuity(rng, max(3, n // 5)),
        check_determinism(),
    ]
