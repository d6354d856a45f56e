from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import cKDTree
from oracles import brute_hausdorff, brute_min_distance, cantor_level, interval_attractor

from ifsconn.maps import ContractionMap, ContractionModulus, TranslatedMap
from ifsconn.sets import (
    BudgetExceeded,
    CellSet,
    attractor_approx,
    chaos_game,
    collar_radius,
    hausdorff_distance,
    hausdorff_points,
    hutchinson_step,
    ifs_attractor,
    image_cellset,
    min_distance,
)

HALF = ContractionMap.affine([[0.5]])
THIRD = ContractionMap.affine([[1 / 3]])


def cell_boxes_cover(S: CellSet, lo: float, hi: float, n: int = 2001) -> bool:
    """Every sample of ``[lo, hi]`` lies in some box of the 1-D cell set."""
    x = np.linspace(lo, hi, n)
    return bool(np.all(np.isin(np.floor(x / S.eps).astype(np.int64), S.cells[:, 0])))


# --- CellSet basics ---------------------------------------------------------------


def test_cellset_dedups_and_sorts():
    S = CellSet(0.5, [[3], [1], [3], [2]])
    assert S.cells[:, 0].tolist() == [1, 2, 3]
    assert len(S) == 3


def test_cellset_rejects_empty_and_bad_eps():
    with pytest.raises(ValueError):
        CellSet(0.1, np.zeros((0, 2), dtype=int))
    with pytest.raises(ValueError):
        CellSet(0.0, [[0]])


def test_from_box_covers_box():
    S = CellSet.from_box([0.0], [1.0], 1 / 8)
    assert S.cells[:, 0].tolist() == list(range(8))


def test_ball_cells_meet_ball():
    S = CellSet.ball(1.0, 0.1, 2)
    lo = S.cells * 0.1
    near = np.clip(0.0, lo, lo + 0.1)
    assert np.all(np.linalg.norm(near, axis=1) <= 1.0)
    # every sample point of the ball is inside some cell
    pts = np.random.default_rng(0).uniform(-1, 1, (2000, 2))
    pts = pts[np.linalg.norm(pts, axis=1) <= 1]
    assert S.contains_cells(np.floor(pts / 0.1)).all()


def test_index_of_and_contains():
    S = CellSet(1.0, [[0, 0], [2, 5], [-3, 1]])
    assert S.index_of([[2, 5], [9, 9], [-3, 1]]).tolist() == [2, -1, 0]


def test_serialization_round_trips():
    S = CellSet(1 / 3, np.random.default_rng(0).integers(-50, 50, (40, 3)))
    assert CellSet.from_text(S.to_text()) == S
    assert CellSet.from_bytes(S.to_bytes()) == S
    # bytes are exact for a given sorted set
    assert S.to_bytes() == CellSet(S.eps, S.cells[::-1]).to_bytes()


def test_from_bytes_rejects_garbage():
    with pytest.raises(ValueError):
        CellSet.from_bytes(b"nonsense" + bytes(20))


# --- images and the Hutchinson operator ------------------------------------------------


def test_image_near_identity_contains_input_cell():
    m = ContractionMap.affine(0.999 * np.eye(2))
    S = CellSet(1 / 16, [[5, -7]])
    assert S.contains_cells(S.cells).all()
    assert image_cellset(m, S).contains_cells(S.cells).all()


def test_image_half_of_unit_interval():
    eps = 1 / 8
    S = CellSet.from_box([0.0], [1.0], eps)
    out = image_cellset(HALF, S)
    assert cell_boxes_cover(out, 0.0, 0.5)
    assert out.cells.min() * eps >= -eps - 1e-15
    assert (out.cells.max() + 1) * eps <= 0.5 + eps + 1e-15


def test_image_lattice_shift():
    eps = 1 / 16
    zero = ContractionMap.affine([[0.0]])
    S = CellSet(eps, [[3]])
    out = image_cellset(TranslatedMap(zero, [5 * eps]), S)
    # the center maps to the single point 5*eps, which sits in cell 5; collar of one cell
    assert out.cells[:, 0].tolist() == [4, 5, 6]


@given(st.floats(0.05, 0.95), st.floats(-3, 3), st.floats(-2, 2), st.floats(0.01, 2))
def test_image_covering_soundness_intervals(a, b, lo, width):
    eps = 1 / 32
    m = ContractionMap.affine([[a]], [b])
    S = CellSet.from_box([lo], [lo + width], eps)
    out = image_cellset(m, S)
    # the true image of the boxes of S is an interval
    box_lo, box_hi = S.cells.min() * eps, (S.cells.max() + 1) * eps
    assert cell_boxes_cover(out, a * box_lo + b, a * box_hi + b)


def test_hutchinson_halves_covers_unit_interval():
    S = CellSet.from_box([0.0], [1.0], 1 / 64)
    out = hutchinson_step(HALF, TranslatedMap(HALF, [0.5]), S)
    assert cell_boxes_cover(out, 0.0, 1.0)


def test_hutchinson_thirds_leaves_middle_gap():
    eps = 1 / 243
    S = CellSet.from_box([0.0], [1.0], eps)
    out = hutchinson_step(THIRD, TranslatedMap(THIRD, [2 / 3]), S)
    assert cell_boxes_cover(out, 0.0, 1 / 3) and cell_boxes_cover(out, 2 / 3, 1.0)
    c = out.centers[:, 0]
    assert not np.any((c > 1 / 3 + 2 * eps) & (c < 2 / 3 - 2 * eps))


def test_hutchinson_single_cell():
    eps = 1 / 64
    out = hutchinson_step(HALF, TranslatedMap(HALF, [0.5]), CellSet(eps, [[0]]), collar=False)
    assert out.cells[:, 0].tolist() == [0, 32]
    collared = hutchinson_step(HALF, TranslatedMap(HALF, [0.5]), CellSet(eps, [[0]]))
    assert collared.contains_cells([[0], [32]]).all()


def test_collar_radius_formula():
    # ceil((alpha*h + h)/eps) with h = eps*sqrt(d)/2
    assert collar_radius(HALF, 0.1, 1) == 1
    m = ContractionMap.affine(0.9 * np.eye(3))
    assert collar_radius(m, 0.1, 3) == math.ceil(1.9 * math.sqrt(3) / 2)


# --- Hausdorff metric -----------------------------------------------------------------


def test_hausdorff_examples():
    S = CellSet.from_box([0.0], [1.0], 1 / 16)
    assert hausdorff_distance(S, S) == 0.0
    assert hausdorff_points([[0.0, 0.0]], [[3.0, 4.0]]) == 5.0
    T = CellSet.from_box([0.0], [2.0], 1 / 16)
    assert abs(hausdorff_distance(S, T) - 1.0) <= 1 / 16


def _random_points(seed, n, d):
    return np.random.default_rng(seed).uniform(-5, 5, (n, d))


@given(st.integers(0, 2**31 - 1), st.integers(1, 30), st.integers(1, 30), st.integers(1, 4))
def test_hausdorff_matches_brute_force(seed, n, m, d):
    P, Q = _random_points(seed, n, d), _random_points(seed + 1, m, d)
    assert hausdorff_points(P, Q) == pytest.approx(brute_hausdorff(P, Q), abs=1e-12)
    assert min_distance(P, Q) == pytest.approx(brute_min_distance(P, Q), abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_hausdorff_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    sets = [CellSet(1 / 8, rng.integers(-20, 20, (int(rng.integers(1, 25)), 2))) for _ in range(3)]
    A, B, C = sets
    assert hausdorff_distance(A, B) == hausdorff_distance(B, A)
    assert (hausdorff_distance(A, B) == 0) == (A == B)
    assert hausdorff_distance(A, C) <= hausdorff_distance(A, B) + hausdorff_distance(B, C) + 1e-12


def test_hausdorff_dimension_mismatch():
    with pytest.raises(ValueError):
        hausdorff_distance(CellSet(1.0, [[0]]), CellSet(1.0, [[0, 0]]))


# --- attractors ---------------------------------------------------------------------


@pytest.mark.parametrize("w", [0.5, 1.0, -0.75, 3.0])
def test_attractor_halves_is_interval(w):
    eps = 1 / 256
    A = attractor_approx(HALF, TranslatedMap(HALF, [w]), eps)
    lo, hi = interval_attractor(0.5, 0.5, w)
    exact = np.linspace(lo, hi, 4001).reshape(-1, 1)
    assert A.err == pytest.approx(eps / 0.5)
    assert hausdorff_points(A.cover.centers, exact) <= A.err + eps / 2
    assert A.certified


def test_attractor_thirds_is_cantor_cover():
    eps = 1 / 729
    A = attractor_approx(THIRD, TranslatedMap(THIRD, [2 / 3]), eps)
    c = A.cover.centers[:, 0]
    assert not np.any((c > 1 / 3 + 2 * eps) & (c < 2 / 3 - 2 * eps))
    # interval-arithmetic oracle: level-8 Cantor intervals are within 3^-8 of A
    iv = cantor_level(1 / 3, 1 / 3, 2 / 3, 8)
    ends = iv.reshape(-1, 1)
    assert hausdorff_points(A.cover.centers, ends) <= A.err + eps / 2 + 3.0**-8


def test_attractor_singleton_for_equal_maps():
    A = attractor_approx(THIRD, TranslatedMap(THIRD, [0.0]), 1 / 128)
    assert len(A.cover) == 1
    assert A.cover.centers[0, 0] == pytest.approx(1 / 256)


def test_attractor_points_lie_in_their_cells():
    A = attractor_approx(HALF, TranslatedMap(HALF, [0.3]), 1 / 64)
    assert np.array_equal(np.floor(A.points / A.eps).astype(np.int64), A.cover.cells)


@given(st.floats(0.1, 0.7), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 1000))
def test_attractor_chaos_points_within_bound(a, w0, w1, seed):
    eps = 1 / 64
    f = ContractionMap.affine(np.array([[a, 0.1], [0.0, a]]))
    gw = TranslatedMap(ContractionMap.affine(np.array([[0.0, -a], [a, 0.0]])), [w0, w1])
    A = attractor_approx(f, gw, eps)
    cloud = chaos_game(f, gw, 2000, seed)
    dist, _ = cKDTree(A.cover.centers).query(cloud.points)
    # points of A are within err + half a cell diagonal of the cover centers
    assert dist.max() <= A.err + eps * math.sqrt(2) / 2 + 1e-9


def test_attractor_independent_of_seed_cover():
    eps = 1 / 128
    f, gw = HALF, TranslatedMap(THIRD, [1.0])
    A = attractor_approx(f, gw, eps)
    B = attractor_approx(f, gw, eps, tol=1e-9 * eps, seeds=[[5.0], [-3.0], [0.25]])
    assert hausdorff_distance(A.cover, B.cover) <= 2 * (max(A.err, B.err) + eps)


def test_attractor_budget():
    with pytest.raises(BudgetExceeded):
        attractor_approx(HALF, TranslatedMap(HALF, [4.0]), 1 / 8192, max_cells=100)


def test_attractor_rejects_bad_args():
    with pytest.raises(ValueError):
        attractor_approx(HALF, TranslatedMap(HALF, [1.0]), 0.0)
    with pytest.raises(ValueError):
        attractor_approx(HALF, TranslatedMap(ContractionMap.affine(0.5 * np.eye(2)), [1.0, 0.0]), 0.1)


def test_attractor_tabulated_modulus_flagged():
    t = np.linspace(0, 50, 501)
    g = ContractionMap("half_sin", ContractionModulus.tabulated(t, 0.5 * t), dim=1)
    A = attractor_approx(g, TranslatedMap(g, [1.0]), 1 / 64)
    assert not A.certified
    assert A.err >= 1 / 64


def test_block_attractor_uses_words():
    # one step expands along an axis, two steps contract
    A2 = np.array([[0.0, 1.2], [0.3, 0.0]])
    f = ContractionMap.affine(A2, block=2)
    g = ContractionMap.affine(A2, [1.0, 0.0], block=2)
    A = ifs_attractor([f, g], 1 / 64)
    cloud = chaos_game(f, g, 2000, 0)
    dist, _ = cKDTree(A.cover.centers).query(cloud.points)
    assert dist.max() <= A.err + (1 / 64) * math.sqrt(2) / 2 + 1e-9


# --- chaos game ---------------------------------------------------------------------


def test_chaos_game_invariant_interval_and_determinism():
    gw = TranslatedMap(HALF, [0.5])
    a = chaos_game(HALF, gw, 5000, 7)
    b = chaos_game(HALF, gw, 5000, 7)
    assert np.array_equal(a.points, b.points)
    assert a.points.min() >= -1e-9 and a.points.max() <= 1 + 1e-9
    assert a.to_csv().startswith("x0\n")


def test_chaos_game_close_to_cover():
    eps = 1 / 256
    gw = TranslatedMap(HALF, [0.5])
    cloud = chaos_game(HALF, gw, 100_000, 3)
    A = attractor_approx(HALF, gw, eps)
    assert hausdorff_points(cloud.points, A.cover.centers) <= 3 * eps


def test_chaos_game_nonaffine_body():
    g = ContractionMap("half_sin", ContractionModulus.linear(0.5), dim=1)
    cloud = chaos_game(g, TranslatedMap(g, [1.0]), 100, 0)
    assert np.all(np.isfinite(cloud.points))
