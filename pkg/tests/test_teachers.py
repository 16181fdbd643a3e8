import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath("src"))

from network.mlp import Mlp, init_mlp
from teachers.teacher import Teacher, TeacherSpec, load_teacher, make_teacher, product_teacher, save_teacher
from teachers.vetting import score_candidates, vet_score, vet_teachers
from utils.seeds import make_rng


def sawtooth_teacher():
    """One input, a zigzag with ten ReLU kinks on [-1/2, 1/2]."""
    knots = np.linspace(-0.45, 0.45, 10)
    w1 = np.ones((1, knots.size))
    b1 = -knots
    # slopes alternate +4, -4 between knots
    w2 = np.array([[4.0]] + [[(-1.0) ** i * 8.0] for i in range(1, knots.size)])
    w2 = np.hstack([w2, np.zeros_like(w2)])
    net = Mlp([1, knots.size, 2], [w1, w2], [b1, np.zeros(2)])
    return Teacher(TeacherSpec([1, knots.size, 2], 1, 0), net=net)


class TeacherTests(unittest.TestCase):
    def test_full_feature_count_is_raw_network(self):
        teacher = make_teacher([5, 8, 2], k=5, seed=1)
        x = make_rng(0).random((7, 5)) - 0.5
        np.testing.assert_array_equal(teacher(x), teacher.net(x))

    def test_masked_features_have_no_effect(self):
        teacher = make_teacher([10, 16, 16, 2], k=2, seed=4)
        rng = make_rng(1)
        x = rng.random((50, 10)) - 0.5
        for _ in range(5):
            y = x.copy()
            y[:, 2:] = rng.normal(size=(50, 8)) * 100
            np.testing.assert_array_equal(teacher(x), teacher(y))

    def test_full_scale_teacher(self):
        teacher = make_teacher([20, 600, 600, 2], k=10, seed=0)
        self.assertEqual(teacher.input_dim, 20)
        self.assertEqual(teacher.feature_count, 10)
        self.assertTrue(all(np.all(b == 0) for b in teacher.net.biases))

    def test_rejects_too_many_features(self):
        with self.assertRaises(ValueError):
            make_teacher([4, 8, 2], k=5, seed=0)

    def test_sample_inputs_zero_masked_features(self):
        teacher = make_teacher([6, 8, 2], k=3, seed=0)
        x = teacher.sample_inputs(make_rng(2), 1000)
        self.assertTrue(np.all(x[:, 3:] == 0))
        self.assertTrue(np.all(np.abs(x[:, :3]) <= 0.5))


class ProductTeacherTests(unittest.TestCase):
    def setUp(self):
        self.a = make_teacher([20, 16, 16, 2], k=3, seed=1)
        self.b = make_teacher([20, 16, 16, 2], k=3, seed=2)

    def test_logits_add_over_slices(self):
        product = product_teacher([(self.a, (0, 3)), (self.b, (3, 6))])
        x = make_rng(5).random((40, 6)) - 0.5
        pad_a = np.zeros((40, 20))
        pad_a[:, :3] = x[:, :3]
        pad_b = np.zeros((40, 20))
        pad_b[:, :3] = x[:, 3:6]
        np.testing.assert_allclose(product(x), self.a(pad_a) + self.b(pad_b), atol=1e-12)
        self.assertEqual(product.feature_count, 6)

    def test_single_part_matches_that_teacher(self):
        product = product_teacher([(self.a, (0, 3))])
        x = make_rng(6).random((10, 3)) - 0.5
        pad = np.zeros((10, 20))
        pad[:, :3] = x
        np.testing.assert_array_equal(product(x), self.a(pad))

    def test_rejects_overlap_and_mismatch(self):
        with self.assertRaises(ValueError):
            product_teacher([(self.a, (0, 3)), (self.b, (2, 5))])
        with self.assertRaises(ValueError):
            product_teacher([(self.a, (0, 4))])
        with self.assertRaises(ValueError):
            product_teacher([(self.a, (0, 3)), (make_teacher([20, 16, 1], k=3, seed=9), (3, 6))])

    def test_rejects_repeated_teacher(self):
        twin = make_teacher([20, 16, 16, 2], k=3, seed=1)
        with self.assertRaises(ValueError):
            product_teacher([(self.a, (0, 3)), (twin, (3, 6))])

    def test_save_and_load(self):
        product = product_teacher([(self.a, (0, 3)), (self.b, (3, 6))])
        x = make_rng(7).random((5, 6)) - 0.5
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "product.json")
            save_teacher(product, path)
            loaded = load_teacher(path)
        np.testing.assert_array_equal(loaded(x), product(x))
        self.assertEqual(loaded.spec.to_dict()["component_slices"], [[0, 3], [3, 6]])


class VettingTests(unittest.TestCase):
    def test_linear_teacher_scores_one(self):
        net = init_mlp([3, 2], seed=0)
        teacher = Teacher(TeacherSpec([3, 2], 3, 0), net=net)
        result = vet_score(teacher, trials=5, seed=0)
        self.assertAlmostEqual(result.score, 1.0, places=10)

    def test_kinked_teacher_scores_low(self):
        self.assertLess(vet_score(sawtooth_teacher(), trials=3, seed=0).score, 0.9)

    def test_constant_slices_count_as_linear(self):
        net = init_mlp([2, 4, 2], seed=0, weight_scale_rule="zero")
        result = vet_score(Teacher(TeacherSpec([2, 4, 2], 2, 0), net=net), trials=2, seed=0)
        self.assertEqual(result.score, 1.0)
        self.assertEqual(result.constant_slices, 4)

    def test_single_candidate(self):
        scored = score_candidates([3, 16, 16, 2], 2, candidates=1, trials=2, seed=3, workers=1)
        teacher = vet_teachers([3, 16, 16, 2], 2, candidates=1, trials=2, seed=3, workers=1)
        self.assertEqual(teacher.spec.seed, scored[0][0])
        self.assertEqual(teacher.spec.vetting_score, scored[0][1].score)

    def test_pick_has_minimum_score(self):
        scored = score_candidates([3, 16, 16, 2], 2, candidates=100, trials=2, seed=1, workers=2)
        teacher = vet_teachers([3, 16, 16, 2], 2, candidates=100, trials=2, seed=1, workers=2)
        self.assertEqual(teacher.spec.vetting_score, min(r.score for _, r in scored))


if __name__ == "__main__":
    unittest.main()
