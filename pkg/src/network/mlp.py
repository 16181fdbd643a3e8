from dataclasses import dataclass
from typing import List

import numpy as np

from utils.seeds import make_rng

WEIGHT_SCALE_RULES = ("fan_in", "he", "zero")


@dataclass
class Mlp:
    """
    Fully connected network: ReLU on hidden layers, identity on the output.
    weights[i] has shape (layer_sizes[i], layer_sizes[i+1]); rows of a batch are samples.
    """

    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        validate_layer_sizes(self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("weights/biases do not match layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} do not chain with {expected}")

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def output_dim(self):
        return self.layer_sizes[-1]

    @property
    def depth(self):
        """Number of hidden layers."""
        return len(self.layer_sizes) - 2

    @property
    def param_count(self):
        return param_count(self.layer_sizes)

    def copy(self):
        return Mlp(list(self.layer_sizes), [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def __call__(self, batch):
        return forward(self, batch)[0]


def validate_layer_sizes(layer_sizes):
    if len(layer_sizes) < 2:
        raise ValueError(f"need at least an input and an output layer, got {layer_sizes}")
    if any(int(s) < 1 for s in layer_sizes):
        raise ValueError(f"every layer needs at least one unit, got {layer_sizes}")


def param_count(layer_sizes):
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]))


def init_mlp(layer_sizes, seed, weight_scale_rule="fan_in"):
    """Gaussian weights with std 1/sqrt(fan_in) ("fan_in"), sqrt(2/fan_in) ("he") or zeros; biases zero."""
    layer_sizes = [int(s) for s in layer_sizes]
    validate_layer_sizes(layer_sizes)
    if weight_scale_rule not in WEIGHT_SCALE_RULES:
        raise ValueError(f"unknown weight scale rule {weight_scale_rule!r}")

    rng = make_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        if weight_scale_rule == "zero":
            w = np.zeros((fan_in, fan_out))
        else:
            std = 1.0 / np.sqrt(fan_in) if weight_scale_rule == "fan_in" else np.sqrt(2.0 / fan_in)
            w = rng.normal(0.0, std, size=(fan_in, fan_out))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return Mlp(layer_sizes, weights, biases)


def _as_batch(net, batch):
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"batch shape {x.shape} does not match input dimension {net.input_dim}")
    return x


def forward_layers(net, batch):
    """All layer activations: [x, h_1, ..., h_L, out]."""
    acts = [_as_batch(net, batch)]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = acts[-1] @ w + b
        acts.append(z if i == last else np.maximum(z, 0.0))
    return acts


def forward(net, batch, capture=False):
    """Returns (outputs, prefinal activations or None)."""
    acts = forward_layers(net, batch)
    prefinal = acts[-2] if capture else None
    return acts[-1], prefinal


def backprop(net, acts, grad_out):
    """Gradient of a loss w.r.t. every parameter, given dLoss/dOutput, in flatten order."""
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    delta = grad_out
    for i in range(len(net.weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            # ReLU subgradient is 0 at the kink
            delta = (delta @ net.weights[i].T) * (acts[i] > 0)
    return _flatten(grads_w, grads_b)


def _flatten(weights, biases):
    parts = []
    for w, b in zip(weights, biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def flatten_params(net):
    return _flatten(net.weights, net.biases)


def unflatten_params(layer_sizes, flat, copy=True):
    """Rebuild a network from a flat vector; copy=False returns views into `flat`."""
    flat = np.asarray(flat, dtype=np.float64)
    expected = param_count(layer_sizes)
    if flat.shape != (expected,):
        raise ValueError(f"expected {expected} parameters for {list(layer_sizes)}, got {flat.shape}")
    weights, biases = [], []
    offset = 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(flat[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out))
        offset += fan_in * fan_out
        biases.append(flat[offset:offset + fan_out])
        offset += fan_out
    if copy:
        weights = [w.copy() for w in weights]
        biases = [b.copy() for b in biases]
    return Mlp(list(layer_sizes), weights, biases)
