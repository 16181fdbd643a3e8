"""
Experiment configs: one TOML file per experiment, parsed into frozen dataclasses.

    schema_version = 1
    kind = "ts_sweep"
    seed = 0

    [teacher]   shape, features, vetted, candidates, vet_trials, file
    [students]  widths, depths, weight_scale_rule
    [training]  schedule | segments, loss, eval_size, trace_every
    [trials]    count, policy, keep, exclude
    [id]        method, k, vectors, counts, neighbors, mle_k, dump_activations, search
    [fit]       hull, n_min, loss_threshold
    [product]   features           (product_manifold)
    [pnorm]     powers, features   (pnorm_sweep)
    [synthetic] manifolds, dims, n, counts, methods, k, mle_k   (synthetic_id)
"""
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Tuple

import toml

from analysis.reports import AGGREGATION_POLICIES
from estimation.intrinsic_dim import METHODS
from manifolds.synth import SAMPLERS
from network.losses import LossKind
from network.mlp import WEIGHT_SCALE_RULES, validate_layer_sizes
from network.training import SCHEDULE_PRESETS, TrainConfig
from utils.errors import ConfigError
from utils.naming import sanitize_token

SCHEMA_VERSION = 1
KINDS = ("synthetic_id", "ts_sweep", "product_manifold", "pnorm_sweep", "vetting")
SWEEP_KINDS = ("ts_sweep", "product_manifold", "pnorm_sweep")


@dataclass(frozen=True)
class TeacherSection:
    shape: Tuple[int, ...] = (20, 48, 48, 2)
    features: Tuple[int, ...] = (2,)
    vetted: bool = False
    candidates: Optional[int] = None
    vet_trials: Optional[int] = None
    file: str = ""


@dataclass(frozen=True)
class StudentSection:
    widths: Tuple[int, ...] = ()
    depths: Tuple[int, ...] = (2,)
    weight_scale_rule: str = "fan_in"


@dataclass(frozen=True)
class TrainingSection:
    schedule: str = "desk"
    segments: Tuple[Tuple[int, int, float], ...] = ()
    loss: str = "cross_entropy_logits"
    eval_size: Optional[int] = None
    trace_every: Optional[int] = None


@dataclass(frozen=True)
class TrialSection:
    count: int = 1
    policy: str = "keep_lowest"
    keep: Optional[int] = None
    exclude: int = 0


@dataclass(frozen=True)
class IdSection:
    method: str = "knn_cumulative"
    k: int = 2
    vectors: int = 12000
    counts: Tuple[int, ...] = ()
    neighbors: Tuple[int, ...] = ()
    mle_k: int = 20
    dump_activations: bool = True
    search: Optional[str] = None


@dataclass(frozen=True)
class FitSection:
    hull: bool = True
    n_min: Optional[int] = None
    loss_threshold: Optional[float] = None


@dataclass(frozen=True)
class ProductSection:
    features: Tuple[int, ...] = (2, 2)


@dataclass(frozen=True)
class PnormSection:
    powers: Tuple[float, ...] = (1.0, 2.0, 4.0)
    features: int = 4


@dataclass(frozen=True)
class SyntheticSection:
    manifolds: Tuple[str, ...] = ("hypercube", "torus")
    dims: Tuple[int, ...] = (2, 4, 8)
    n: int = 10000
    counts: Tuple[int, ...] = ()
    methods: Tuple[str, ...] = ("knn_cumulative",)
    k: int = 2
    mle_k: int = 20


SECTIONS = {
    "teacher": TeacherSection,
    "students": StudentSection,
    "training": TrainingSection,
    "trials": TrialSection,
    "id": IdSection,
    "fit": FitSection,
    "product": ProductSection,
    "pnorm": PnormSection,
    "synthetic": SyntheticSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    name: str = ""
    output_dir: str = ""
    teacher: TeacherSection = field(default_factory=TeacherSection)
    students: StudentSection = field(default_factory=StudentSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    trials: TrialSection = field(default_factory=TrialSection)
    id: IdSection = field(default_factory=IdSection)
    fit: FitSection = field(default_factory=FitSection)
    product: ProductSection = field(default_factory=ProductSection)
    pnorm: PnormSection = field(default_factory=PnormSection)
    synthetic: SyntheticSection = field(default_factory=SyntheticSection)

    def to_dict(self):
        """Canonical snapshot; the output directory is not part of an experiment's identity."""
        data = asdict(self)
        data.pop("output_dir")
        data["schema_version"] = SCHEMA_VERSION
        return _plain(data)

    def config_hash(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_output_dir(self, output_dir):
        return ExperimentConfig(**{**{f.name: getattr(self, f.name) for f in fields(self)}, "output_dir": output_dir})

    def train_config(self, loss_kind=None, seed=0):
        t = self.training
        kwargs = {}
        if t.eval_size is not None:
            kwargs["eval_size"] = t.eval_size
        if t.trace_every is not None:
            kwargs["trace_every"] = t.trace_every
        loss_kind = loss_kind or t.loss
        if t.segments:
            return TrainConfig(t.segments, loss_kind, seed, **kwargs)
        return TrainConfig.from_preset(t.schedule, loss_kind, seed, **kwargs)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _section(name, data):
    cls = SECTIONS[name]
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"[{name}] has unknown keys: {', '.join(unknown)}")
    return cls(**{k: _freeze(v) for k, v in data.items()})


def config_from_dict(data, base_dir="."):
    data = dict(data)
    version = data.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    top = {k: data.pop(k) for k in ("kind", "seed", "name", "output_dir") if k in data}
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(unknown)}")
    if "kind" not in top:
        raise ConfigError("config is missing 'kind'")

    teacher = _section("teacher", data.get("teacher"))
    if teacher.file and not os.path.isabs(teacher.file):
        teacher = TeacherSection(**{**asdict(teacher), "file": os.path.normpath(os.path.join(base_dir, teacher.file))})
    try:
        cfg = ExperimentConfig(
            kind=str(top["kind"]),
            seed=int(top.get("seed", 0)),
            name=str(top.get("name", "")),
            output_dir=str(top.get("output_dir", "")),
            teacher=teacher,
            **{name: _section(name, data.get(name)) for name in SECTIONS if name != "teacher"},
        )
    except TypeError as e:
        raise ConfigError(f"invalid config: {e}") from None
    validate(cfg)
    return cfg


def load_experiment_config(path):
    try:
        data = toml.load(path)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except toml.TomlDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    cfg = config_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
    if not cfg.output_dir:
        stem = os.path.splitext(os.path.basename(path))[0]
        cfg = cfg.with_output_dir(os.path.join("runs", sanitize_token(cfg.name or stem)))
    return cfg


def _positive_ints(values, what):
    if not values:
        raise ConfigError(f"{what} must be a nonempty list")
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{what} entries must be positive integers, got {v!r}")


def validate(cfg):
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}; expected one of {KINDS}")

    if cfg.kind == "synthetic_id":
        s = cfg.synthetic
        for m in s.manifolds:
            if m not in SAMPLERS:
                raise ConfigError(f"unknown manifold {m!r}; expected one of {sorted(SAMPLERS)}")
        _positive_ints(s.dims, "[synthetic] dims")
        for method in s.methods:
            if method not in METHODS:
                raise ConfigError(f"unknown ID method {method!r}")
        if any(c > s.n for c in s.counts):
            raise ConfigError(f"[synthetic] counts must not exceed n={s.n}")
        return

    t = cfg.teacher
    try:
        validate_layer_sizes(list(t.shape))
    except ValueError as e:
        raise ConfigError(f"[teacher] shape: {e}") from None
    if t.file and not os.path.isfile(t.file):
        raise ConfigError(f"[teacher] file {t.file} does not exist")

    if cfg.kind == "vetting":
        _positive_ints(t.features, "[teacher] features")
        return

    if cfg.kind == "ts_sweep" and not t.file:
        _positive_ints(t.features, "[teacher] features")
    if cfg.kind == "product_manifold":
        _positive_ints(cfg.product.features, "[product] features")
    if cfg.kind == "pnorm_sweep":
        if not cfg.pnorm.powers or any(not p > 0 for p in cfg.pnorm.powers):
            raise ConfigError("[pnorm] powers must be positive")
        _positive_ints([cfg.pnorm.features], "[pnorm] features")
    for k in _feature_counts(cfg):
        if k > t.shape[0]:
            raise ConfigError(f"feature count {k} exceeds teacher input size {t.shape[0]}")

    _positive_ints(cfg.students.widths, "[students] widths")
    _positive_ints(cfg.students.depths, "[students] depths")
    if cfg.students.weight_scale_rule not in WEIGHT_SCALE_RULES:
        raise ConfigError(f"unknown weight_scale_rule {cfg.students.weight_scale_rule!r}")

    tr = cfg.training
    if not tr.segments and tr.schedule not in SCHEDULE_PRESETS:
        raise ConfigError(f"unknown schedule {tr.schedule!r}; expected one of {sorted(SCHEDULE_PRESETS)}")
    try:
        LossKind.parse(tr.loss)
        cfg.train_config()
    except ValueError as e:
        raise ConfigError(f"[training] {e}") from None

    if cfg.trials.count < 1:
        raise ConfigError("[trials] count must be >= 1")
    if cfg.trials.policy not in AGGREGATION_POLICIES:
        raise ConfigError(f"unknown trial policy {cfg.trials.policy!r}; expected one of {AGGREGATION_POLICIES}")

    if cfg.id.method not in METHODS:
        raise ConfigError(f"unknown ID method {cfg.id.method!r}")
    if cfg.id.vectors <= cfg.id.k:
        raise ConfigError(f"[id] vectors ({cfg.id.vectors}) must exceed k ({cfg.id.k})")
    if any(c > cfg.id.vectors for c in cfg.id.counts):
        raise ConfigError(f"[id] counts must not exceed vectors={cfg.id.vectors}")


def _feature_counts(cfg):
    if cfg.kind == "product_manifold":
        return list(cfg.product.features)
    if cfg.kind == "pnorm_sweep":
        return [cfg.pnorm.features]
    return [] if cfg.teacher.file else list(cfg.teacher.features)


def config_diff(old, new, prefix=""):
    """['key: old -> new', ...] between two config snapshots."""
    diff = []
    for key in sorted(set(old) | set(new)):
        name = f"{prefix}{key}"
        a, b = old.get(key), new.get(key)
        if isinstance(a, dict) and isinstance(b, dict):
            diff.extend(config_diff(a, b, name + "."))
        elif a != b:
            diff.append(f"{name}: {a!r} -> {b!r}")
    return diff
