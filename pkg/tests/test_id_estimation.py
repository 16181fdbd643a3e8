import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath("src"))

from estimation.intrinsic_dim import (
    estimate_id,
    estimate_id_knn,
    estimate_id_mle,
    id_vs_neighbors,
    id_vs_pointcount,
    knn_estimate_from_ratios,
    mle_estimate_from_ratios,
)
from estimation.neighbors import NeighborRatios, nearest_neighbors, neighbor_ratios
from manifolds.cloud import PointCloud
from manifolds.synth import sample_hypercube, sample_torus
from utils.errors import EstimationError
from utils.seeds import make_rng


def poisson_ratios(d, k, n, seed):
    """μ_j = r_j / r_1 for the first k points of a unit-rate Poisson process in d dimensions."""
    rng = make_rng(seed)
    volumes = np.cumsum(rng.exponential(size=(n, k)), axis=1)
    radii = volumes ** (1.0 / d)
    return NeighborRatios(radii[:, 1:] / radii[:, :1], k, np.arange(n), 0)


class NeighborTests(unittest.TestCase):
    def test_collinear_hand_case(self):
        cloud = PointCloud(np.array([[0.0], [1.0], [3.0]]))
        ratios = neighbor_ratios(cloud, 2)
        self.assertEqual(ratios.mu(2)[0], 3.0)

    def test_duplicate_points_are_excluded(self):
        cloud = PointCloud(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))
        ratios = neighbor_ratios(cloud, 2)
        self.assertEqual(ratios.excluded_count, 2)
        self.assertEqual(list(ratios.point_index), [2])

    def test_all_identical_points(self):
        with self.assertRaisesRegex(EstimationError, "no usable points"):
            neighbor_ratios(PointCloud(np.ones((5, 2))), 2)

    def test_needs_more_points_than_k(self):
        with self.assertRaises(EstimationError):
            neighbor_ratios(PointCloud(np.arange(6.0).reshape(3, 2)), 3)

    def test_matches_exhaustive_all_pairs(self):
        points = make_rng(4).random((60, 2))
        ratios = neighbor_ratios(PointCloud(points), 4)
        dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
        np.fill_diagonal(dist, np.inf)
        r = np.sort(dist, axis=1)[:, :4]
        np.testing.assert_allclose(ratios.ratios, r[:, 1:] / r[:, :1], rtol=1e-12)

    def test_ties_resolve_to_lower_index(self):
        points = np.array([[0.0], [1.0], [-1.0], [5.0]])
        self.assertEqual(list(nearest_neighbors(points, 2)[0]), [1, 2])

    def test_kdtree_agrees_bit_exactly(self):
        points = make_rng(8).random((300, 3))
        cloud = PointCloud(points)
        np.testing.assert_array_equal(
            neighbor_ratios(cloud, 5, search="kdtree").ratios, neighbor_ratios(cloud, 5, search="brute").ratios
        )

    def test_ratios_are_ordered(self):
        ratios = neighbor_ratios(sample_hypercube(3, 400, seed=1), 6).ratios
        self.assertTrue(np.all(ratios >= 1.0))
        self.assertTrue(np.all(np.diff(ratios, axis=1) >= 0))


class KnnEstimatorTests(unittest.TestCase):
    def test_inverse_cdf_oracle_for_twonn(self):
        for d in (2, 5, 10, 20):
            u = make_rng(d).random(50000)
            mu = (1.0 - u) ** (-1.0 / d)
            est = knn_estimate_from_ratios(NeighborRatios(mu[:, None], 2, np.arange(mu.size), 0))
            self.assertAlmostEqual(est.d_hat / d, 1.0, delta=0.02)

    def test_three_neighbor_cumulative_law(self):
        est = knn_estimate_from_ratios(poisson_ratios(5, 3, 50000, seed=2))
        self.assertAlmostEqual(est.d_hat, 5.0, delta=0.15)

    def test_k2_equals_direct_twonn_regression(self):
        cloud = sample_hypercube(3, 2000, seed=6)
        est = estimate_id_knn(cloud, k=2)
        mu = np.sort(neighbor_ratios(cloud, 2).mu(2))
        c = np.arange(1, mu.size + 1) / (mu.size + 1)
        x, y = np.log(mu), np.log(1.0 - c)
        self.assertAlmostEqual(est.d_hat, -np.dot(x, y) / np.dot(x, x), delta=1e-12)

    def test_scale_invariance_is_bit_exact(self):
        cloud = sample_hypercube(4, 1000, seed=7)
        self.assertEqual(estimate_id_knn(cloud).d_hat, estimate_id_knn(cloud.scaled(4.0)).d_hat)

    def test_permutation_invariance(self):
        cloud = sample_hypercube(3, 1000, seed=9)
        shuffled = cloud.subset(make_rng(1).permutation(cloud.n))
        self.assertEqual(estimate_id_knn(cloud).d_hat, estimate_id_knn(shuffled).d_hat)

    def test_hypercube_estimates(self):
        for d in (2, 4):
            est = estimate_id(sample_hypercube(d, 5000, seed=d), k=2, search="kdtree")
            self.assertGreater(est.d_hat, 0.85 * d)
            self.assertLess(est.d_hat, 1.05 * d)

    def test_torus_estimate(self):
        est = estimate_id(sample_torus(2, 5000, seed=3), k=2, search="kdtree")
        self.assertGreater(est.d_hat, 1.8)
        self.assertLess(est.d_hat, 2.4)

    def test_higher_dimensional_hypercubes(self):
        # boundary points pull the estimate below d; more so as d grows
        for d, low in ((8, 0.85), (16, 0.8)):
            est = estimate_id(sample_hypercube(d, 10000, seed=d), k=2, search="brute")
            self.assertGreater(est.d_hat, low * d, f"d={d}")
            self.assertLess(est.d_hat, 1.02 * d, f"d={d}")

    def test_higher_dimensional_tori(self):
        for d in (4, 8):
            est = estimate_id(sample_torus(d, 10000, seed=d), k=2, search="brute")
            self.assertGreater(est.d_hat, 0.85 * d, f"d={d}")
            self.assertLess(est.d_hat, 1.3 * d, f"d={d}")

    def test_zero_variance_ratios(self):
        ratios = NeighborRatios(np.ones((10, 1)), 2, np.arange(10), 0)
        with self.assertRaises(EstimationError):
            knn_estimate_from_ratios(ratios)

    def test_discard_fraction_drops_top_ratios(self):
        ratios = poisson_ratios(4, 2, 5000, seed=5)
        est = knn_estimate_from_ratios(ratios, discard_fraction=0.1)
        self.assertEqual(est.n_used, 4500)
        self.assertAlmostEqual(est.d_hat, 4.0, delta=0.3)


class MleEstimatorTests(unittest.TestCase):
    def test_poisson_oracle_unbiased(self):
        est = mle_estimate_from_ratios(poisson_ratios(10, 100, 10000, seed=1), unbiased=True)
        self.assertAlmostEqual(est.d_hat, 10.0, delta=0.3)
        self.assertEqual(est.per_point.shape, (10000,))

    def test_biased_form_uses_k_minus_one(self):
        ratios = poisson_ratios(3, 10, 2000, seed=4)
        biased = mle_estimate_from_ratios(ratios, unbiased=False)
        unbiased = mle_estimate_from_ratios(ratios, unbiased=True)
        self.assertAlmostEqual(biased.d_hat / unbiased.d_hat, 9.0 / 8.0, places=12)

    def test_constant_per_point_values(self):
        # every point has μ_2 = e, μ_3 = e^2: denominator 2·2 - 1 = 3, unbiased value 1/3
        ratios = NeighborRatios(np.tile([np.e, np.e ** 2], (5, 1)), 3, np.arange(5), 0)
        self.assertAlmostEqual(mle_estimate_from_ratios(ratios).d_hat, 1.0 / 3.0, places=12)

    def test_needs_k_at_least_three(self):
        with self.assertRaises(EstimationError):
            estimate_id_mle(sample_hypercube(2, 50, seed=0), k=2)

    def test_large_k_underestimates_hypercube(self):
        est = estimate_id_mle(sample_hypercube(10, 3000, seed=2), k=100, search="kdtree")
        self.assertLess(est.d_hat, 10.0)


class ProfileTests(unittest.TestCase):
    def test_full_count_equals_full_cloud_estimate(self):
        cloud = sample_hypercube(2, 500, seed=1)
        [(n, est)] = id_vs_pointcount(cloud, 2, [500])
        self.assertEqual(n, 500)
        self.assertEqual(est.d_hat, estimate_id_knn(cloud).d_hat)

    def test_counts_are_sorted_and_small_ones_skipped(self):
        cloud = sample_hypercube(2, 500, seed=1)
        with self.assertLogs("estimation.intrinsic_dim", level="WARNING"):
            profile = id_vs_pointcount(cloud, 2, [400, 2, 100, 200])
        self.assertEqual([n for n, _ in profile], [100, 200, 400])

    def test_count_above_cloud_size(self):
        with self.assertRaises(ValueError):
            id_vs_pointcount(sample_hypercube(2, 50, seed=1), 2, [51])

    def test_neighbors_profile_is_sorted(self):
        profile = id_vs_neighbors(sample_hypercube(3, 800, seed=2), [5, 2, 3])
        self.assertEqual([k for k, _ in profile], [2, 3, 5])
        self.assertTrue(all(est.k == k for k, est in profile))


if __name__ == "__main__":
    unittest.main()
