import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from network.losses import LossKind, loss, loss_gradient, per_sample_excess
from network.mlp import backprop, flatten_params, forward_layers, unflatten_params
from network.optim import AdamState, adam_step
from utils.config import config
from utils.errors import TrainingFault
from utils.seeds import make_rng

logger = logging.getLogger(__name__)

DEFAULT_EVAL_SIZE = 100_000
DEFAULT_TRACE_EVERY = 100

# (steps, batch_size, learning_rate) per segment
SCHEDULE_PRESETS = {
    "random": [(200_000, 200, 0.01), (20_000, 1000, 0.01), (20_000, 4000, 0.001)],
    "vetted": [(100_000, 200, 0.01), (50_000, 200, 0.001), (20_000, 200, 0.0001)],
    "desk": [(36_000, 200, 0.01), (2_000, 1000, 0.01), (2_000, 4000, 0.001)],
}


@dataclass(frozen=True)
class TrainConfig:
    segments: Tuple[Tuple[int, int, float], ...]
    loss_kind: LossKind
    seed: int = 0
    eval_size: Optional[int] = None
    trace_every: Optional[int] = None

    def __post_init__(self):
        settings = config.get("Training", {})
        if self.eval_size is None:
            object.__setattr__(self, "eval_size", int(settings.get("eval_size", DEFAULT_EVAL_SIZE)))
        if self.trace_every is None:
            object.__setattr__(self, "trace_every", int(settings.get("trace_every", DEFAULT_TRACE_EVERY)))
        segments = tuple((int(s), int(b), float(lr)) for s, b, lr in self.segments)
        if not segments:
            raise ValueError("training schedule needs at least one segment")
        for steps, batch, lr in segments:
            if steps < 1 or batch < 1 or not lr > 0:
                raise ValueError(f"invalid schedule segment (steps={steps}, batch={batch}, lr={lr})")
        if int(self.eval_size) < 2:
            raise ValueError(f"eval_size must be >= 2, got {self.eval_size}")
        if int(self.trace_every) < 1:
            raise ValueError(f"trace_every must be >= 1, got {self.trace_every}")
        object.__setattr__(self, "segments", segments)
        if isinstance(self.loss_kind, str):
            object.__setattr__(self, "loss_kind", LossKind.parse(self.loss_kind))

    @property
    def total_steps(self):
        return sum(s for s, _, _ in self.segments)

    @classmethod
    def from_preset(cls, name, loss_kind, seed=0, **kwargs):
        try:
            segments = SCHEDULE_PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown schedule preset {name!r}; expected one of {sorted(SCHEDULE_PRESETS)}") from None
        return cls(tuple(segments), loss_kind, seed, **kwargs)


@dataclass
class TraceRow:
    step: int
    loss: float
    lr: float
    batch_size: int


@dataclass
class TrainResult:
    net: object
    final_loss: float
    final_excess: float
    excess_stderr: float
    trace: List[TraceRow] = field(default_factory=list)

    @property
    def loss_trace(self):
        return self.trace


def loss_and_gradient(net, batch, loss_kind, teacher_out):
    acts = forward_layers(net, batch)
    value = loss(loss_kind, acts[-1], teacher_out)
    return value, backprop(net, acts, loss_gradient(loss_kind, acts[-1], teacher_out))


def backward(net, batch, loss_kind, teacher_out):
    """Exact gradient of the mean batch loss with respect to the flattened parameters."""
    grad = loss_and_gradient(net, batch, loss_kind, teacher_out)[1]
    if not np.all(np.isfinite(grad)):
        raise TrainingFault("non-finite gradient")
    return grad


def uniform_box_sampler(input_dim, feature_count=None):
    k = input_dim if feature_count is None else int(feature_count)

    def sample(rng, n):
        x = np.zeros((n, input_dim))
        x[:, :k] = rng.random((n, k)) - 0.5
        return x

    return sample


def evaluate(student, teacher_fn, sampler, loss_kind, rng, size, chunk=None):
    """Mean loss, mean excess loss (KL for cross-entropy) and its standard error on fresh samples."""
    chunk = int(chunk or config.get("Training", {}).get("eval_chunk", 10_000))
    losses, excess = [], []
    remaining = int(size)
    while remaining > 0:
        n = min(chunk, remaining)
        x = sampler(rng, n)
        s, t = student(x), teacher_fn(x)
        excess.append(per_sample_excess(loss_kind, s, t))
        losses.append(loss(loss_kind, s, t) * n)
        remaining -= n
    excess = np.concatenate(excess)
    mean_loss = float(np.sum(losses)) / size
    return mean_loss, float(np.mean(excess)), float(np.std(excess, ddof=1) / np.sqrt(excess.size))


def train(student, teacher_fn, train_config, sampler=None):
    """
    Online ADAM training: a fresh batch every step, segment by segment.
    `sampler(rng, n)` draws inputs; defaults to the teacher's own sampler or the [-1/2, 1/2] box.
    """
    if sampler is None:
        sampler = getattr(teacher_fn, "sample_inputs", None) or uniform_box_sampler(student.input_dim)
    loss_kind = train_config.loss_kind
    rng = make_rng(train_config.seed)
    layer_sizes = list(student.layer_sizes)
    state = AdamState.create(flatten_params(student))
    net = unflatten_params(layer_sizes, state.params, copy=False)

    trace = []
    window = []
    step = 0
    for steps, batch_size, lr in train_config.segments:
        for _ in range(steps):
            x = sampler(rng, batch_size)
            step += 1
            try:
                value, grad = loss_and_gradient(net, x, loss_kind, teacher_fn(x))
                if not np.isfinite(value):
                    raise TrainingFault(f"loss diverged at step {step}")
                state = adam_step(state, grad, lr)
            except TrainingFault as e:
                raise TrainingFault(str(e), trace=trace, step=step) from None
            net = unflatten_params(layer_sizes, state.params, copy=False)
            window.append(value)
            if len(window) == train_config.trace_every:
                trace.append(TraceRow(step, float(np.mean(window)), lr, batch_size))
                window = []
    if window:
        trace.append(TraceRow(step, float(np.mean(window)), lr, batch_size))

    trained = unflatten_params(layer_sizes, state.params)
    final_loss, final_excess, stderr = evaluate(trained, teacher_fn, sampler, loss_kind, rng, train_config.eval_size)
    if not np.isfinite(final_loss):
        raise TrainingFault("evaluation loss is not finite", trace=trace, step=step)
    logger.debug("[Train] N=%d loss=%.6g excess=%.6g", trained.param_count, final_loss, final_excess)
    return TrainResult(trained, final_loss, final_excess, stderr, trace)
