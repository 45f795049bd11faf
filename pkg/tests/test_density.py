import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ridgepatrol.density import Bandwidth, DensityModel, kde, kde_gradient, kde_hessian, kde_many, knn_bandwidth
from ridgepatrol.errors import DegenerateDataError, ParameterError
from ridgepatrol.geo import GeoPoint, GeoPointSet, haversine


def fd_gradient(model, x, step=1e-6):
    return np.array([(kde_many(model, x + e * step)[0] - kde_many(model, x - e * step)[0]) / (2 * step)
                     for e in np.eye(2)])


def fd_hessian(model, x, step=1e-6):
    return np.array([(kde_gradient(model, x + e * step) - kde_gradient(model, x - e * step)) / (2 * step)
                     for e in np.eye(2)])


def random_scene(rng, n=10):
    center = np.array([rng.uniform(-1.2, 1.2), rng.uniform(-3.0, 3.0)])
    beta = 10 ** rng.uniform(-3, -2)
    data = GeoPointSet(center + rng.normal(0, beta, (n, 2)))
    return DensityModel(data, Bandwidth(beta)), center + rng.normal(0, beta, 2)


class TestBandwidth:
    def test_two_points_k1_is_their_distance(self):
        a, b = GeoPoint(41.88, -87.63), GeoPoint(41.79, -87.60)
        bw = knn_bandwidth(GeoPointSet.from_points([a, b]), 1)
        assert bw.miles == pytest.approx(haversine(a, b).miles, rel=1e-12)

    def test_five_points_k2_matches_bruteforce(self):
        # mpmath: per-row sorted off-diagonal distances, two smallest, averaged.
        pts = GeoPointSet.from_degrees([(41.85, -87.65), (41.90, -87.70), (41.80, -87.62),
                                        (41.88, -87.61), (41.95, -87.75)])
        assert knn_bandwidth(pts, 2).radians == pytest.approx(0.0011449379844292732992, rel=1e-12)

    def test_default_k_is_ten(self):
        import inspect
        assert inspect.signature(knn_bandwidth).parameters["k"].default == 10

    @pytest.mark.parametrize("k", [0, 5, -1])
    def test_k_out_of_range(self, k):
        pts = GeoPointSet.from_degrees([(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)])
        with pytest.raises(ParameterError):
            knn_bandwidth(pts, k)

    def test_coincident_points(self):
        with pytest.raises(DegenerateDataError):
            knn_bandwidth(GeoPointSet.from_degrees([(1, 1)] * 4), 2)

    def test_nondecreasing_in_k(self, rng):
        pts = GeoPointSet(rng.normal(0, 0.01, (40, 2)))
        values = [knn_bandwidth(pts, k).radians for k in range(1, 40)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_unit_views(self):
        bw = Bandwidth.from_degrees(1.0)
        assert bw.radians == pytest.approx(math.pi / 180)
        assert Bandwidth.from_miles(bw.miles).radians == pytest.approx(bw.radians)


class TestKde:
    def test_single_point_peak(self):
        m = DensityModel(GeoPointSet.from_degrees([(41.9, -87.6)]), Bandwidth(0.002))
        assert kde(m, GeoPoint(41.9, -87.6)) == pytest.approx(1 / (2 * math.pi * 0.002**2), rel=1e-14)

    def test_three_points_match_term_by_term(self):
        data = GeoPointSet(np.array([[0.0, 0.0], [0.0, 0.001], [0.0005, 0.0]]))
        m = DensityModel(data, Bandwidth(0.001))
        # 40-digit mpmath evaluation of the normalised Gaussian kernel sum.
        assert kde_many(m, [[0.0002, 0.0003]])[0] == pytest.approx(138900.06841209962916, rel=1e-12)

    def test_decays_far_from_data(self):
        m = DensityModel(GeoPointSet.from_degrees([(0, 0), (0.01, 0.01)]), Bandwidth(1e-4))
        vals = kde_many(m, [[0.0, d] for d in (0.0, 1e-4, 1e-3, 1e-2)])
        assert np.all(np.diff(vals) < 0) and vals[-1] == 0.0

    @given(st.permutations(list(range(8))))
    def test_permutation_invariant(self, perm):
        base = np.random.default_rng(3).normal(0, 0.001, (8, 2))
        a = DensityModel(GeoPointSet(base), Bandwidth(0.001))
        b = DensityModel(GeoPointSet(base[list(perm)]), Bandwidth(0.001))
        x = [[0.0003, -0.0002]]
        assert kde_many(a, x)[0] == pytest.approx(kde_many(b, x)[0], rel=1e-13)
        assert kde_many(a, x)[0] >= 0


class TestDerivatives:
    def test_gradient_zero_at_single_point(self):
        m = DensityModel(GeoPointSet(np.array([[0.3, 0.2]])), Bandwidth(0.001))
        assert np.allclose(kde_gradient(m, [0.3, 0.2]), 0, atol=1e-6)

    def test_gradient_zero_at_midpoint_of_symmetric_pair(self):
        m = DensityModel(GeoPointSet(np.array([[0.0, -0.001], [0.0, 0.001]])), Bandwidth(0.001))
        g = kde_gradient(m, [0.0, 0.0])
        assert np.abs(g).max() < 1e-9 * np.abs(kde_gradient(m, [0.0, 0.0005])).max()

    def test_hessian_negative_definite_at_single_point(self):
        m = DensityModel(GeoPointSet(np.array([[0.7, -1.0]])), Bandwidth(0.002))
        assert np.all(np.linalg.eigvalsh(kde_hessian(m, [0.7, -1.0])) < 0)

    def test_hessian_isotropic_at_cloud_center(self, rng):
        sigma = 0.002
        m = DensityModel(GeoPointSet(rng.normal(0, sigma, (1000, 2))), Bandwidth(sigma))
        lam = np.linalg.eigvalsh(kde_hessian(m, [0.0, 0.0]))
        assert np.all(lam < 0)
        assert abs(lam[0] - lam[1]) / abs(lam[0]) < 0.2

    def test_against_finite_differences(self, rng):
        for _ in range(100):
            m, x = random_scene(rng)
            g = kde_gradient(m, x)
            assert np.linalg.norm(fd_gradient(m, x) - g) <= 1e-5 * np.linalg.norm(g)
            h = kde_hessian(m, x)
            assert np.linalg.norm(fd_hessian(m, x) - h) <= 1e-4 * np.linalg.norm(h)
            assert h[0, 1] == h[1, 0]

    def test_far_separations_use_closed_form(self):
        # h above the series cut-off exercises the closed-form branch.
        m = DensityModel(GeoPointSet(np.array([[0.0, 0.0], [0.1, 0.05]])), Bandwidth(0.08))
        x = np.array([0.05, 0.0])
        g = kde_gradient(m, x)
        assert np.linalg.norm(fd_gradient(m, x, 1e-6) - g) <= 1e-6 * np.linalg.norm(g)
        h = kde_hessian(m, x)
        assert np.linalg.norm(fd_hessian(m, x, 1e-6) - h) <= 1e-5 * np.linalg.norm(h)
