from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from network.checkpoint import mlp_from_dict, mlp_to_dict
from network.mlp import forward, init_mlp
from utils.files import read_json, write_json


@dataclass
class TeacherSpec:
    """
    A teacher of `feature_count` live inputs. Inputs at indices >= feature_count are masked to zero.
    A product teacher has no network of its own; `components` pairs each part with its input slice.
    """

    base_shape: List[int]
    feature_count: int
    seed: Optional[int] = None
    vetting_score: Optional[float] = None
    components: List[Tuple["TeacherSpec", Tuple[int, int]]] = field(default_factory=list)

    def to_dict(self):
        return {
            "base_shape": list(self.base_shape),
            "feature_count": int(self.feature_count),
            "seed": self.seed,
            "vetting_score": self.vetting_score,
            "component_slices": [list(sl) for _, sl in self.components],
        }


class Teacher:
    def __init__(self, spec, net=None, parts=None):
        self.spec = spec
        self.net = net
        self.parts = list(parts or [])
        if (net is None) == (not self.parts):
            raise ValueError("a teacher has either a network or product parts")

    @property
    def input_dim(self):
        if self.net is not None:
            return self.net.input_dim
        return max(stop for _, (_, stop) in self.parts)

    @property
    def output_dim(self):
        if self.net is not None:
            return self.net.output_dim
        return self.parts[0][0].output_dim

    @property
    def feature_count(self):
        return self.spec.feature_count

    def __call__(self, batch):
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if self.net is not None:
            masked = x.copy()
            masked[:, self.feature_count:] = 0.0
            return forward(self.net, masked)[0]

        out = None
        for part, (start, stop) in self.parts:
            part_in = np.zeros((x.shape[0], part.input_dim))
            part_in[:, :stop - start] = x[:, start:stop]
            logits = part(part_in)
            out = logits if out is None else out + logits
        return out

    def sample_inputs(self, rng, n):
        """Uniform on [-1/2, 1/2] for live features, zero for masked ones."""
        x = np.zeros((int(n), self.input_dim))
        live = self.live_features()
        x[:, live] = rng.random((int(n), len(live))) - 0.5
        return x

    def live_features(self):
        if self.net is not None:
            return list(range(self.feature_count))
        live = []
        for _, (start, stop) in self.parts:
            live.extend(range(start, stop))
        return live


def make_teacher(shape, k, seed):
    """Random teacher: std 1/sqrt(fan_in) gaussian weights, zero biases, inputs >= k masked."""
    shape = [int(s) for s in shape]
    if len(shape) < 2:
        raise ValueError(f"teacher shape needs at least two layers, got {shape}")
    k = int(k)
    if not 1 <= k <= shape[0]:
        raise ValueError(f"feature count k={k} must be in [1, {shape[0]}]")
    net = init_mlp(shape, seed, "fan_in")
    return Teacher(TeacherSpec(shape, k, int(seed)), net=net)


def product_teacher(parts):
    """
    Sum of part logits, each part reading its own slice of the input:
    T(x) = Σ_i T_i(x[start_i:stop_i]).
    """
    if not parts:
        raise ValueError("product teacher needs at least one part")
    slices = []
    for teacher, (start, stop) in parts:
        start, stop = int(start), int(stop)
        if not 0 <= start < stop:
            raise ValueError(f"invalid input slice ({start}, {stop})")
        if stop - start != teacher.feature_count:
            raise ValueError(
                f"slice ({start}, {stop}) has width {stop - start} but the part has {teacher.feature_count} features"
            )
        slices.append((start, stop))

    ordered = sorted(slices)
    for (_, prev_stop), (next_start, _) in zip(ordered, ordered[1:]):
        if next_start < prev_stop:
            raise ValueError(f"input slices overlap: {ordered}")

    output_dims = {teacher.output_dim for teacher, _ in parts}
    if len(output_dims) != 1:
        raise ValueError(f"parts disagree on output dimension: {sorted(output_dims)}")

    seen = {}
    for teacher, _ in parts:
        if teacher.net is None:
            continue
        key = (tuple(teacher.spec.base_shape), teacher.spec.seed)
        if key in seen:
            raise ValueError(f"two parts share architecture {list(key[0])} and seed {key[1]}; use distinct teachers")
        seen[key] = teacher

    components = [(teacher.spec, sl) for (teacher, _), sl in zip(parts, slices)]
    input_dim = max(stop for _, stop in slices)
    spec = TeacherSpec(
        base_shape=[input_dim, output_dims.pop()],
        feature_count=sum(stop - start for start, stop in slices),
        components=components,
    )
    return Teacher(spec, parts=list(zip([t for t, _ in parts], slices)))


def teacher_to_dict(teacher):
    payload = {"spec": teacher.spec.to_dict()}
    if teacher.net is not None:
        payload["network"] = mlp_to_dict(teacher.net)
    else:
        payload["components"] = [
            {"slice": [start, stop], "teacher": teacher_to_dict(part)} for part, (start, stop) in teacher.parts
        ]
    return payload


def teacher_from_dict(payload):
    spec_data = payload["spec"]
    if "network" in payload:
        spec = TeacherSpec(
            base_shape=spec_data["base_shape"],
            feature_count=spec_data["feature_count"],
            seed=spec_data.get("seed"),
            vetting_score=spec_data.get("vetting_score"),
        )
        return Teacher(spec, net=mlp_from_dict(payload["network"]))
    parts = [(teacher_from_dict(c["teacher"]), tuple(c["slice"])) for c in payload["components"]]
    return product_teacher(parts)


def save_teacher(teacher, path):
    write_json(path, teacher_to_dict(teacher))


def load_teacher(path):
    return teacher_from_dict(read_json(path))
