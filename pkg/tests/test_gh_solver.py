"""Tests for the GH solver against exhaustive enumeration and forced values."""

import numpy as np
import pytest

from metric_lab.errors import DomainError
from metric_lab.gh_solver import (
    Correspondence,
    correspondence_from_map,
    distortion_of_correspondence,
    gh_bounds,
    gh_exact_small,
    map_distortion,
    pointed_gh_bounds,
)
from metric_lab.metric_core import FiniteMetricSpace, PointedWindow, rescale, restrict_ball

from .oracles import count_full_correspondences, gh_exhaustive, minimal_full_correspondences


def random_space(rng, n, scale=1.0):
    """Random points in the plane with the Euclidean metric."""
    pts = rng.random((n, 2)) * scale
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return FiniteMetricSpace(d)


def two_point_space(gap):
    return FiniteMetricSpace([[0.0, gap], [gap, 0.0]])


class TestDistortion:
    def test_identity_bijection_has_zero_distortion(self):
        rng = np.random.default_rng(1)
        X = random_space(rng, 5)
        R = Correspondence(tuple((i, i) for i in range(5)))
        assert distortion_of_correspondence(X, X, R) == 0.0

    def test_two_point_gap_mismatch(self):
        R = Correspondence(((0, 0), (1, 1)))
        assert distortion_of_correspondence(two_point_space(1), two_point_space(3), R) == 2.0

    def test_one_to_two_matching_pays_the_spread(self):
        X = two_point_space(1.0)
        Y = FiniteMetricSpace([[0, 0.7, 1], [0.7, 0, 0.7], [1, 0.7, 0]])
        R = Correspondence(((0, 0), (0, 2), (1, 1)))  # X point 0 paired twice, D = 1
        assert distortion_of_correspondence(X, Y, R) >= 1.0

    def test_non_full_correspondence_names_uncovered_index(self):
        X, Y = two_point_space(1), two_point_space(2)
        with pytest.raises(DomainError, match="Y index 1"):
            distortion_of_correspondence(X, Y, Correspondence(((0, 0), (1, 0))))


class TestExactSmall:
    def test_self_distance_zero_with_identity_witness(self):
        rng = np.random.default_rng(2)
        X = random_space(rng, 5)
        res = gh_exact_small(X, X)
        assert res.exact == 0.0
        I, J = res.witness.arrays()
        assert np.array_equal(np.sort(I), np.sort(J))

    def test_two_point_law(self):
        res = gh_exact_small(two_point_space(1.0), two_point_space(3.0))
        assert res.exact == pytest.approx(1.0, abs=1e-12)

    def test_two_point_full_correspondence_count_is_seven(self):
        # sanity for the enumeration oracle itself
        assert count_full_correspondences(2, 2) == 7

    def test_singleton_vs_two_points(self):
        X = FiniteMetricSpace(np.zeros((1, 1)))
        res = gh_exact_small(X, two_point_space(2.0))
        assert res.exact == pytest.approx(1.0, abs=1e-12)

    def test_empty_space_rejected(self):
        with pytest.raises(DomainError):
            gh_exact_small(FiniteMetricSpace(np.zeros((0, 0))), two_point_space(1))

    @pytest.mark.parametrize("trial", range(8))
    def test_matches_exhaustive_enumeration(self, trial):
        rng = np.random.default_rng(100 + trial)
        X = random_space(rng, int(rng.integers(3, 6)))
        Y = random_space(rng, int(rng.integers(3, 6)))
        res = gh_exact_small(X, Y)
        assert res.exact == pytest.approx(gh_exhaustive(X, Y), abs=1e-12)

    def test_budget_exhaustion_returns_bounds_only(self):
        rng = np.random.default_rng(7)
        X, Y = random_space(rng, 7), random_space(rng, 7)
        res = gh_exact_small(X, Y, budget=10)
        assert res.exact is None
        assert res.lower <= res.upper

    def test_symmetry_under_argument_swap(self):
        rng = np.random.default_rng(11)
        X, Y = random_space(rng, 5), random_space(rng, 6)
        a = gh_exact_small(X, Y).exact
        b = gh_exact_small(Y, X).exact
        assert a == pytest.approx(b, abs=1e-12)

    def test_triangle_inequality_on_small_triples(self):
        rng = np.random.default_rng(13)
        spaces = [random_space(rng, int(rng.integers(3, 7))) for _ in range(4)]
        vals = {}
        for i in range(4):
            for j in range(i + 1, 4):
                vals[i, j] = gh_exact_small(spaces[i], spaces[j]).exact
        for i in range(4):
            for j in range(i + 1, 4):
                for k in range(4):
                    if k in (i, j):
                        continue
                    a, b = vals[tuple(sorted((i, k)))], vals[tuple(sorted((k, j)))]
                    assert vals[i, j] <= a + b + 1e-9

    def test_scaling_law(self):
        rng = np.random.default_rng(17)
        X, Y = random_space(rng, 4), random_space(rng, 5)
        lam = 3.0
        scaled = gh_exact_small(rescale(X, 1 / lam), rescale(Y, 1 / lam)).exact
        assert scaled == pytest.approx(lam * gh_exact_small(X, Y).exact, rel=1e-10)


class TestBounds:
    def test_identical_spaces_collapse_to_zero(self):
        rng = np.random.default_rng(3)
        X = random_space(rng, 9)
        res = gh_bounds(X, X)
        assert res.lower == 0.0
        assert res.upper == 0.0
        assert res.exact is None

    def test_diameter_gap_bound_on_segments(self):
        a = FiniteMetricSpace(np.abs(np.subtract.outer(np.linspace(0, 1, 5),
                                                       np.linspace(0, 1, 5))))
        b = FiniteMetricSpace(np.abs(np.subtract.outer(np.linspace(0, 3, 5),
                                                       np.linspace(0, 3, 5))))
        res = gh_bounds(a, b)
        assert res.lower >= 1.0
        assert res.upper >= res.lower

    def test_sandwich_against_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            X = random_space(rng, int(rng.integers(3, 7)))
            Y = random_space(rng, int(rng.integers(3, 7)))
            bounds = gh_bounds(X, Y)
            exact = gh_exact_small(X, Y).exact
            assert bounds.lower <= exact + 1e-12
            assert exact <= bounds.upper + 1e-12

    def test_local_search_upper_dominates_exact_on_subsample_pairs(self):
        rng = np.random.default_rng(23)
        for _ in range(3):
            X12, Y12 = random_space(rng, 12), random_space(rng, 12)
            keep_x = rng.choice(12, size=8, replace=False)
            keep_y = rng.choice(12, size=8, replace=False)
            X8, Y8 = X12.submatrix(np.sort(keep_x)), Y12.submatrix(np.sort(keep_y))
            upper = gh_bounds(X8, Y8).upper
            exact = gh_exact_small(X8, Y8)
            if exact.exact is not None:
                assert upper >= exact.exact - 1e-12


class TestPointed:
    def window(self, dist, base, radius):
        return PointedWindow(FiniteMetricSpace(dist), base, 1.0, radius)

    def test_same_window_twice_is_zero(self):
        w = self.window([[0, 1, 1], [1, 0, 2], [1, 2, 0]], 0, 1.0)
        res = pointed_gh_bounds(w, w)
        assert res.upper == 0.0

    def test_v_windows_with_unequal_arms(self):
        w1 = self.window([[0, 1, 1], [1, 0, 2], [1, 2, 0]], 0, 2.0)
        w2 = self.window([[0, 1, 2], [1, 0, 3], [2, 3, 0]], 0, 2.0)
        res = pointed_gh_bounds(w1, w2, method="exact")
        assert res.exact == pytest.approx(0.5, abs=1e-12)

    def test_pointed_exact_at_least_unpointed_exact(self):
        rng = np.random.default_rng(31)
        for _ in range(6):
            X = random_space(rng, 5)
            Y = random_space(rng, 5)
            free = gh_exact_small(X, Y).exact
            pointed = gh_exact_small(X, Y, base_pair=(0, 0)).exact
            assert pointed >= free - 1e-12

    def test_pointed_matches_pointed_enumeration(self):
        rng = np.random.default_rng(37)
        for _ in range(5):
            X = random_space(rng, int(rng.integers(3, 6)))
            Y = random_space(rng, int(rng.integers(3, 6)))
            res = gh_exact_small(X, Y, base_pair=(0, 0))
            assert res.exact == pytest.approx(gh_exhaustive(X, Y, base_pair=(0, 0)),
                                              abs=1e-12)

    def test_radius_mismatch_warns(self):
        w1 = self.window([[0, 1], [1, 0]], 0, 1.0)
        w2 = self.window([[0, 1], [1, 0]], 0, 2.0)
        with pytest.warns(UserWarning, match="different radii"):
            pointed_gh_bounds(w1, w2)


class TestMapDistortion:
    def test_isometric_bijection(self):
        rng = np.random.default_rng(41)
        X = random_space(rng, 6)
        perm = rng.permutation(6)
        Y = X.submatrix(perm)
        f = np.argsort(perm)  # x sits at position f[x] of Y
        assert map_distortion(f, X, Y) == (0.0, 0.0)

    def test_constant_map_to_two_point_space(self):
        X = FiniteMetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
        Y = two_point_space(2.0)
        dist, defect = map_distortion(np.zeros(3, dtype=int), X, Y)
        assert dist == pytest.approx(X.diameter())
        assert defect == pytest.approx(2.0)

    def test_out_of_range_image_rejected(self):
        X = two_point_space(1.0)
        with pytest.raises(DomainError):
            map_distortion([0, 5], X, X)

    def test_eps_isometry_bridge(self):
        # dist(f) <= e1 and defect <= e2 force d_GH < 2 max(e1, e2)
        rng = np.random.default_rng(43)
        for _ in range(10):
            n = int(rng.integers(3, 7))
            X = random_space(rng, n)
            Y = random_space(rng, n)
            f = rng.integers(0, n, size=n)
            e1, e2 = map_distortion(f, X, Y)
            eps = max(e1, e2)
            R = correspondence_from_map(f, X, Y)
            upper = distortion_of_correspondence(X, Y, R) / 2.0
            assert upper <= 2 * eps + 1e-12
            exact = gh_exact_small(X, Y).exact
            assert exact <= 2 * eps + 1e-12


class TestOracleInternals:
    def test_minimal_family_covers_both_sides(self):
        for pairs in minimal_full_correspondences(3, 2):
            assert {i for i, _ in pairs} == {0, 1, 2}
            assert {j for _, j in pairs} == {0, 1}

    def test_exhaustive_matches_tiny_brute_force(self):
        # for 2x2, check enumeration of minimal correspondences against the
        # literal scan of all 7 full relations
        rng = np.random.default_rng(47)
        X, Y = random_space(rng, 2), random_space(rng, 2)
        best = np.inf
        cells = [(0, 0), (0, 1), (1, 0), (1, 1)]
        for mask in range(1, 16):
            chosen = [cells[b] for b in range(4) if mask >> b & 1]
            if {i for i, _ in chosen} != {0, 1} or {j for _, j in chosen} != {0, 1}:
                continue
            best = min(best, distortion_of_correspondence(
                X, Y, Correspondence(tuple(chosen))))
        assert gh_exhaustive(X, Y) == pytest.approx(best / 2.0, abs=1e-15)
