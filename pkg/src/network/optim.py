from dataclasses import dataclass

import numpy as np

from utils.errors import TrainingFault

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def create(cls, params):
        params = np.array(params, dtype=np.float64, copy=True)
        return cls(params, np.zeros_like(params), np.zeros_like(params), 0)


def adam_step(state, gradient, lr, beta1=BETA1, beta2=BETA2, eps=EPSILON):
    """One bias-corrected ADAM update; returns a new state."""
    g = np.asarray(gradient, dtype=np.float64)
    if g.shape != state.params.shape:
        raise ValueError(f"gradient shape {g.shape} does not match parameters {state.params.shape}")
    if not np.all(np.isfinite(g)):
        raise TrainingFault(f"non-finite gradient at step {state.step + 1}", step=state.step + 1)

    t = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * g
    v = beta2 * state.v + (1.0 - beta2) * g * g
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    params = state.params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(params, m, v, t)
