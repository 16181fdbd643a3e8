import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath("src"))

from network.losses import CROSS_ENTROPY, MSE, LossKind, kl_divergence, loss, teacher_entropy
from network.mlp import Mlp, flatten_params, forward, init_mlp, param_count, unflatten_params
from network.optim import AdamState, adam_step
from network.training import backward
from utils.errors import TrainingFault
from utils.seeds import make_rng


def numeric_gradient(net, x, kind, target, step=1e-5):
    flat = flatten_params(net)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        up, down = flat.copy(), flat.copy()
        up[i] += step
        down[i] -= step
        f_up = loss(kind, unflatten_params(net.layer_sizes, up)(x), target)
        f_down = loss(kind, unflatten_params(net.layer_sizes, down)(x), target)
        grad[i] = (f_up - f_down) / (2 * step)
    return grad


class MlpTests(unittest.TestCase):
    def test_full_scale_teacher_parameter_count(self):
        self.assertEqual(param_count([20, 600, 600, 2]), 374402)
        self.assertEqual(init_mlp([20, 600, 600, 2], seed=0).param_count, 374402)

    def test_parameter_count_matches_flat_length(self):
        rng = make_rng(0)
        for _ in range(100):
            sizes = list(rng.integers(1, 9, size=rng.integers(2, 6)))
            net = init_mlp(sizes, seed=1)
            self.assertEqual(flatten_params(net).size, param_count(sizes))

    def test_fan_in_weight_scale(self):
        net = init_mlp([4, 250000, 1], seed=3)
        self.assertAlmostEqual(float(np.std(net.weights[0])), 0.5, delta=0.01)
        self.assertTrue(all(np.all(b == 0) for b in net.biases))

    def test_same_seed_same_network(self):
        a, b = init_mlp([3, 5, 2], seed=9), init_mlp([3, 5, 2], seed=9)
        np.testing.assert_array_equal(flatten_params(a), flatten_params(b))

    def test_rejects_degenerate_layers(self):
        with self.assertRaises(ValueError):
            init_mlp([3], seed=0)
        with self.assertRaises(ValueError):
            init_mlp([3, 0, 1], seed=0)

    def test_zero_network_outputs_zero(self):
        net = init_mlp([3, 4, 2], seed=0, weight_scale_rule="zero")
        np.testing.assert_array_equal(net(np.ones((5, 3))), np.zeros((5, 2)))

    def test_single_hidden_unit_is_relu(self):
        net = Mlp([1, 1, 1], [np.ones((1, 1)), np.ones((1, 1))], [np.zeros(1), np.zeros(1)])
        x = np.array([[-2.0], [0.0], [3.5]])
        np.testing.assert_array_equal(net(x), np.maximum(x, 0.0))

    def test_matches_plain_matrix_arithmetic(self):
        net = init_mlp([5, 7, 6, 3], seed=2)
        x = make_rng(1).normal(size=(10, 5))
        h = x
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            h = np.maximum(h.dot(w) + b, 0.0)
        expected = h.dot(net.weights[-1]) + net.biases[-1]
        out, prefinal = forward(net, x, capture=True)
        np.testing.assert_allclose(out, expected, atol=1e-12)
        np.testing.assert_allclose(prefinal, h, atol=1e-12)

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            forward(init_mlp([3, 2], seed=0), np.zeros((4, 2)))

    def test_piecewise_linear_inside_one_region(self):
        net = init_mlp([2, 16, 16, 2], seed=5)
        a = np.array([0.1, -0.2])
        direction = np.array([0.3, 0.7])
        pts = np.array([a, a + 1e-7 * direction, a + 2e-7 * direction])
        out = net(pts)
        np.testing.assert_allclose(out[2] - out[1], out[1] - out[0], atol=1e-10)

    def test_unflatten_round_trip(self):
        net = init_mlp([3, 4, 2], seed=1)
        again = unflatten_params(net.layer_sizes, flatten_params(net))
        for w, w2 in zip(net.weights, again.weights):
            np.testing.assert_array_equal(w, w2)


class LossTests(unittest.TestCase):
    def test_identical_logits_give_teacher_entropy(self):
        t = make_rng(0).normal(size=(20, 3))
        self.assertAlmostEqual(loss(LossKind(CROSS_ENTROPY), t, t), teacher_entropy(t), places=12)
        self.assertAlmostEqual(kl_divergence(t, t), 0.0, places=14)

    def test_cross_entropy_closed_form(self):
        value = loss(LossKind(CROSS_ENTROPY), np.array([[np.log(3.0), 0.0]]), np.array([[0.0, 0.0]]))
        self.assertAlmostEqual(value, -0.5 * np.log(0.75) - 0.5 * np.log(0.25), places=12)

    def test_pnorm_zero_when_equal(self):
        y = np.array([[0.3], [-1.0]])
        for p in (0.5, 1.0, 3.0):
            self.assertEqual(loss(LossKind.parse(f"pnorm({p})"), y, y), 0.0)

    def test_pnorm_parsing(self):
        self.assertEqual(LossKind.parse("pnorm:1.5"), LossKind("pnorm", 1.5))
        self.assertEqual(str(LossKind.parse("pnorm(4)")), "pnorm(4.0)")
        with self.assertRaises(ValueError):
            LossKind.parse("pnorm(0)")
        with self.assertRaises(ValueError):
            LossKind.parse("hinge")

    def test_cross_entropy_needs_two_logits(self):
        with self.assertRaises(ValueError):
            loss(LossKind(CROSS_ENTROPY), np.zeros((3, 1)), np.zeros((3, 1)))

    def test_non_finite_outputs(self):
        with self.assertRaises(TrainingFault):
            loss(LossKind(MSE), np.array([[np.inf]]), np.array([[0.0]]))


class GradientTests(unittest.TestCase):
    def test_matches_central_differences(self):
        rng = make_rng(42)
        cases = [
            ([3, 5, 4, 2], "cross_entropy_logits"),
            ([3, 5, 4, 1], "mse"),
            ([2, 6, 5, 1], "pnorm(1.25)"),
            ([2, 6, 5, 1], "pnorm(2)"),
            ([2, 6, 5, 2], "pnorm(4)"),
        ]
        for trial in range(4):
            for sizes, kind_text in cases:
                kind = LossKind.parse(kind_text)
                net = init_mlp(sizes, seed=trial, weight_scale_rule="he")
                x = rng.random((8, sizes[0])) - 0.5
                target = 5.0 + rng.random((8, sizes[-1]))
                grad = backward(net, x, kind, target)
                np.testing.assert_allclose(grad, numeric_gradient(net, x, kind, target), rtol=1e-4, atol=1e-8)

    def test_random_shapes_and_losses(self):
        rng = make_rng(2024)
        for case in range(200):
            depth = int(rng.integers(1, 4))
            widths = [int(w) for w in rng.integers(1, 7, size=depth)]
            choice = int(rng.integers(3))
            if choice == 0:
                kind = LossKind(MSE)
            elif choice == 1:
                kind = LossKind(CROSS_ENTROPY)
            else:
                kind = LossKind("pnorm", float(rng.uniform(1.5, 4.0)))
            n_out = int(rng.integers(2, 4)) if kind.name == CROSS_ENTROPY else int(rng.integers(1, 4))
            sizes = [int(rng.integers(1, 5))] + widths + [n_out]
            net = init_mlp(sizes, seed=case, weight_scale_rule="he")
            batch = int(rng.integers(1, 17))
            x = rng.random((batch, sizes[0])) - 0.5
            target = 5.0 + rng.random((batch, n_out))
            np.testing.assert_allclose(
                backward(net, x, kind, target), numeric_gradient(net, x, kind, target, step=1e-5),
                rtol=1e-4, atol=1e-7, err_msg=f"sizes={sizes} kind={kind}",
            )

    def test_zero_loss_gives_zero_gradient(self):
        net = init_mlp([3, 4, 1], seed=0)
        x = make_rng(0).random((5, 3))
        grad = backward(net, x, LossKind(MSE), net(x))
        np.testing.assert_array_equal(grad, np.zeros_like(grad))

    def test_duplicated_batch_keeps_mean_gradient(self):
        net = init_mlp([3, 4, 2], seed=1)
        x = make_rng(2).random((6, 3))
        t = make_rng(3).normal(size=(6, 2))
        kind = LossKind(CROSS_ENTROPY)
        np.testing.assert_allclose(
            backward(net, x, kind, t), backward(net, np.vstack([x, x]), kind, np.vstack([t, t])), atol=1e-14
        )


class AdamTests(unittest.TestCase):
    def test_first_step_moves_by_learning_rate(self):
        state = adam_step(AdamState.create([0.0]), np.array([1.0]), lr=0.01)
        self.assertAlmostEqual(state.params[0], -0.01, places=8)
        self.assertEqual(state.step, 1)

    def test_zero_gradient_never_moves(self):
        state = AdamState.create([1.0, -2.0])
        for _ in range(10):
            state = adam_step(state, np.zeros(2), lr=0.1)
        np.testing.assert_array_equal(state.params, [1.0, -2.0])

    def test_non_finite_gradient(self):
        with self.assertRaises(TrainingFault):
            adam_step(AdamState.create([0.0]), np.array([np.nan]), lr=0.01)

    def test_identical_runs(self):
        grads = make_rng(0).normal(size=(20, 3))
        a = b = AdamState.create(np.zeros(3))
        for g in grads:
            a, b = adam_step(a, g, 0.01), adam_step(b, g, 0.01)
        np.testing.assert_array_equal(a.params, b.params)


if __name__ == "__main__":
    unittest.main()
