from dataclasses import dataclass
import re

import numpy as np
from scipy.special import log_softmax, softmax

from utils.errors import TrainingFault

MSE = "mse"
CROSS_ENTROPY = "cross_entropy_logits"
PNORM = "pnorm"

_PNORM_RE = re.compile(r"^pnorm\(?\s*([0-9.eE+-]+)\s*\)?$")


@dataclass(frozen=True)
class LossKind:
    name: str
    p: float = 2.0

    def __post_init__(self):
        if self.name not in (MSE, CROSS_ENTROPY, PNORM):
            raise ValueError(f"unknown loss kind {self.name!r}")
        if self.name == PNORM and not self.p > 0:
            raise ValueError(f"pnorm loss needs p > 0, got {self.p}")

    @classmethod
    def parse(cls, text):
        """'mse', 'cross_entropy_logits', 'pnorm(1.5)' or 'pnorm:1.5'."""
        text = str(text).strip().replace(":", "(")
        match = _PNORM_RE.match(text)
        if match:
            return cls(PNORM, float(match.group(1)))
        return cls(text)

    def __str__(self):
        return f"pnorm({self.p!r})" if self.name == PNORM else self.name


def _check(student_out, teacher_out, kind):
    s = np.asarray(student_out, dtype=np.float64)
    t = np.asarray(teacher_out, dtype=np.float64)
    if s.shape != t.shape:
        raise ValueError(f"student output {s.shape} and teacher output {t.shape} differ")
    if kind.name == CROSS_ENTROPY and (s.ndim != 2 or s.shape[1] < 2):
        raise ValueError("cross-entropy needs at least 2 output logits")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
        raise TrainingFault("non-finite network outputs")
    return s, t


def loss(kind, student_out, teacher_out):
    """
    mse: mean squared difference; pnorm: mean |y - y*|^p;
    cross_entropy_logits: batch mean of Σ softmax(teacher) · (-log softmax(student)).
    """
    s, t = _check(student_out, teacher_out, kind)
    if kind.name == MSE:
        return float(np.mean((s - t) ** 2))
    if kind.name == PNORM:
        return float(np.mean(np.abs(s - t) ** kind.p))
    return float(np.mean(-np.sum(softmax(t, axis=1) * log_softmax(s, axis=1), axis=1)))


def loss_gradient(kind, student_out, teacher_out):
    """dLoss/dStudentOutput, same shape as the outputs."""
    s, t = _check(student_out, teacher_out, kind)
    if kind.name == MSE:
        return 2.0 * (s - t) / s.size
    if kind.name == PNORM:
        e = s - t
        mag = np.abs(e)
        # subgradient 0 at e == 0
        safe = np.where(mag > 0, mag, 1.0)
        return np.where(mag > 0, kind.p * safe ** (kind.p - 1.0) * np.sign(e), 0.0) / s.size
    return (softmax(s, axis=1) - softmax(t, axis=1)) / s.shape[0]


def teacher_entropy(teacher_out):
    t = np.asarray(teacher_out, dtype=np.float64)
    return float(np.mean(-np.sum(softmax(t, axis=1) * log_softmax(t, axis=1), axis=1)))


def per_sample_excess(kind, student_out, teacher_out):
    """Per-sample loss with the irreducible part removed: KL for cross-entropy, the loss itself otherwise."""
    s, t = _check(student_out, teacher_out, kind)
    if kind.name == MSE:
        return np.mean((s - t) ** 2, axis=1) if s.ndim == 2 else (s - t) ** 2
    if kind.name == PNORM:
        e = np.abs(s - t) ** kind.p
        return np.mean(e, axis=1) if e.ndim == 2 else e
    log_p = log_softmax(t, axis=1)
    return np.sum(np.exp(log_p) * (log_p - log_softmax(s, axis=1)), axis=1)


def kl_divergence(student_out, teacher_out):
    return float(np.mean(per_sample_excess(LossKind(CROSS_ENTROPY), student_out, teacher_out)))
