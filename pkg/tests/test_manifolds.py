import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath("src"))

from manifolds.cloud import PointCloud
from manifolds.cloud_io import load_cloud, save_cloud
from manifolds.synth import sample_hypercube, sample_manifold, sample_torus
from utils.errors import CloudFormatError


class SyntheticManifoldTests(unittest.TestCase):
    def test_same_seed_gives_identical_clouds(self):
        a = sample_hypercube(3, 100, seed=11)
        b = sample_hypercube(3, 100, seed=11)
        np.testing.assert_array_equal(a.points, b.points)
        self.assertFalse(np.array_equal(a.points, sample_hypercube(3, 100, seed=12).points))

    def test_smallest_hypercube(self):
        cloud = sample_hypercube(1, 2, seed=0)
        self.assertEqual(cloud.points.shape, (2, 1))
        self.assertTrue(np.all((cloud.points >= 0) & (cloud.points <= 1)))

    def test_hypercube_coordinate_means_within_five_sigma(self):
        n = 5000
        cloud = sample_hypercube(6, n, seed=3)
        bound = 5 * (12 * n) ** -0.5
        self.assertTrue(np.all(np.abs(cloud.points.mean(axis=0) - 0.5) < bound))

    def test_torus_blocks_lie_on_unit_circles(self):
        cloud = sample_torus(4, 500, seed=5)
        self.assertEqual(cloud.dim, 8)
        norms = cloud.points[:, 0::2] ** 2 + cloud.points[:, 1::2] ** 2
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_three_points_on_circle(self):
        cloud = sample_torus(1, 3, seed=0)
        np.testing.assert_allclose(np.linalg.norm(cloud.points, axis=1), 1.0, atol=1e-12)

    def test_rejects_degenerate_arguments(self):
        with self.assertRaises(ValueError):
            sample_hypercube(0, 10, seed=0)
        with self.assertRaises(ValueError):
            sample_torus(2, 1, seed=0)
        with self.assertRaises(ValueError):
            sample_manifold("sphere", 2, 10, seed=0)

    def test_dispatch_by_name(self):
        np.testing.assert_array_equal(sample_manifold("torus", 2, 20, 9).points, sample_torus(2, 20, 9).points)


class PointCloudTests(unittest.TestCase):
    def test_rejects_single_point(self):
        with self.assertRaisesRegex(CloudFormatError, "fewer than 2 points"):
            PointCloud(np.zeros((1, 3)))

    def test_rejects_non_finite_values(self):
        with self.assertRaises(CloudFormatError):
            PointCloud(np.array([[0.0, 1.0], [np.nan, 2.0]]))

    def test_points_are_read_only(self):
        cloud = PointCloud(np.zeros((3, 2)))
        with self.assertRaises(ValueError):
            cloud.points[0, 0] = 1.0


class CloudFileTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "cloud.csv")

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, text):
        with open(self.path, "w") as f:
            f.write(text)

    def test_round_trip_is_bit_exact(self):
        cloud = PointCloud(np.array([[0.1, 1.0 / 3.0], [-2.5e-17, 7.0], [1e300, np.pi]]))
        save_cloud(cloud, self.path)
        np.testing.assert_array_equal(load_cloud(self.path).points, cloud.points)

    def test_file_has_no_header(self):
        save_cloud(PointCloud(np.array([[1.0, 2.0], [3.0, 4.0]])), self.path)
        with open(self.path) as f:
            self.assertEqual(f.readline().strip(), "1.0,2.0")

    def test_wrong_width_row_is_named(self):
        self._write("1,2\n3,4\n5\n")
        with self.assertRaises(CloudFormatError) as ctx:
            load_cloud(self.path)
        self.assertEqual(ctx.exception.row, 2)
        self.assertIn("row 2", str(ctx.exception))

    def test_non_finite_value_is_rejected(self):
        self._write("1,2\ninf,4\n")
        with self.assertRaisesRegex(CloudFormatError, "row 1"):
            load_cloud(self.path)

    def test_empty_file(self):
        self._write("")
        with self.assertRaisesRegex(CloudFormatError, "fewer than 2 points"):
            load_cloud(self.path)


if __name__ == "__main__":
    unittest.main()
