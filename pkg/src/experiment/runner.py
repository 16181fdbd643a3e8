import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional

import numpy as np

from analysis.power_law import CurvePoint, LossCurve, fit_power_law, n_max_at_loss_threshold, n_max_empirical, save_curve
from analysis.reports import aggregate_trials
from estimation.intrinsic_dim import (
    KNN_CUMULATIVE,
    estimate_id,
    estimate_id_mle,
    estimates_table,
    id_vs_neighbors,
    id_vs_pointcount,
)
from experiment.config import config_diff, config_from_dict
from manifolds.cloud import PointCloud
from manifolds.cloud_io import load_cloud, save_cloud
from manifolds.synth import sample_manifold
from network.checkpoint import load_checkpoint, mlp_from_dict, save_checkpoint, write_trace
from network.losses import CROSS_ENTROPY, PNORM, LossKind
from network.mlp import forward, init_mlp
from network.training import train
from teachers.teacher import load_teacher, make_teacher, product_teacher, save_teacher
from teachers.vetting import vet_teachers
from utils.config import config, worker_count
from utils.errors import ConfigError, EstimationError, FitError, ScalingError, TrainingFault
from utils.files import ensure_dir, file_checksum, read_csv, read_json, write_csv, write_json
from utils.naming import format_number, unit_name
from utils.seeds import derive_seed, make_rng

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
STAGES = ("train", "analyze", "report")

IDS_HEADER = ["unit", "width", "depth", "trial", "N", "method", "k", "n_used", "d_hat", "fit_r2"]
SUMMARY_HEADER = [
    "label", "role", "feature_count", "loss_kind", "power", "alpha", "alpha_stderr", "c", "n_points_used",
    "four_over_alpha", "d_hat", "d_hat_std", "n_max_threshold", "n_max_extrapolated", "n_max_empirical",
]
SYNTHETIC_HEADER = ["n", "method", "k", "n_used", "d_hat", "fit_r2"]
DEFAULT_NEIGHBORS = (2, 3, 5, 10, 20)
RUN_FIELDS = ("checkpoint", "activations", "d_hat")


@dataclass
class UnitResult:
    label: str
    width: int
    depth: int
    trial: int
    n_params: int
    seed: int
    loss_kind: str
    final_loss: Optional[float] = None
    final_excess: Optional[float] = None
    excess_stderr: Optional[float] = None
    diverged: bool = False
    error: str = ""
    # run-relative paths and the unit's ID estimate; filled from the run directory, not stored
    checkpoint: str = ""
    activations: str = ""
    d_hat: Optional[float] = None

    @property
    def name(self):
        return unit_name(self.width, self.depth, self.trial)

    @property
    def curve_loss(self):
        """KL gap for cross-entropy (its floor is zero), the loss itself otherwise."""
        if self.diverged:
            return float("nan")
        return self.final_excess if self.loss_kind == CROSS_ENTROPY else self.final_loss

    def to_dict(self):
        data = asdict(self)
        for key in RUN_FIELDS:
            del data[key]
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k not in RUN_FIELDS})


@dataclass
class SweepTarget:
    """One loss curve: a teacher, the loss students train on, and how it is reported."""

    label: str
    teacher: object
    loss_kind: LossKind
    role: str = "teacher"
    power: Optional[float] = None

    @property
    def feature_count(self):
        return self.teacher.feature_count


@dataclass
class RunRecord:
    run_dir: str
    config_hash: str
    kind: str
    status: str
    units: List[UnitResult] = field(default_factory=list)
    fits: Dict[str, dict] = field(default_factory=dict)
    ids: Dict[str, dict] = field(default_factory=dict)
    failures: List[dict] = field(default_factory=list)
    created: str = ""
    updated: str = ""


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _blank(value):
    return "" if value is None else value


class ExperimentRunner:
    def __init__(self, cfg, workers=None):
        if not cfg.output_dir:
            raise ConfigError("experiment has no output directory")
        self.cfg = cfg
        self.run_dir = cfg.output_dir
        self.workers = workers or worker_count()
        self.failures = []
        self.created = None
        self.stages_done = []

    def path(self, *parts):
        return os.path.join(self.run_dir, *parts)

    # --- manifest -------------------------------------------------------

    def _open_run_dir(self):
        manifest_path = self.path(MANIFEST)
        if os.path.exists(manifest_path):
            manifest = read_manifest(self.run_dir)
            if manifest.get("config_hash") != self.cfg.config_hash():
                diff = config_diff(manifest.get("config", {}), self.cfg.to_dict())
                raise ConfigError(
                    f"{self.run_dir} holds a run of a different config ({len(diff)} differences)", diff=diff
                )
            self.created = manifest.get("created")
            self.stages_done = list(manifest.get("stages_completed", []))
            logger.info("[Resume] Continuing run in %s", self.run_dir)
        ensure_dir(self.run_dir)
        self.created = self.created or _now()

    def write_manifest(self, status):
        files = {}
        for root, dirs, names in os.walk(self.run_dir):
            dirs.sort()
            for name in sorted(names):
                if name == MANIFEST or name.endswith(".tmp"):
                    continue
                full = os.path.join(root, name)
                rel = os.path.relpath(full, self.run_dir).replace(os.sep, "/")
                files[rel] = file_checksum(full)
        write_json(self.path(MANIFEST), {
            "schema_version": 1,
            "kind": self.cfg.kind,
            "config_hash": self.cfg.config_hash(),
            "config": self.cfg.to_dict(),
            "status": status,
            "stages_completed": self.stages_done,
            "created": self.created,
            "updated": _now(),
            "failures": self.failures,
            "files": files,
        })

    # --- entry point ----------------------------------------------------

    def run(self, stages=STAGES):
        unknown = [s for s in stages if s not in STAGES]
        if unknown:
            raise ValueError(f"unknown stages {unknown}; expected a subset of {STAGES}")
        self._open_run_dir()
        logger.info("[Sweep] %s experiment %s -> %s (%d workers)", self.cfg.kind, self.cfg.name, self.run_dir, self.workers)
        try:
            if self.cfg.kind == "synthetic_id":
                if "analyze" in stages or "train" in stages:
                    self._synthetic()
            elif self.cfg.kind == "vetting":
                self._vetting()
            else:
                targets = self._targets()
                units = self._train(targets) if "train" in stages or "analyze" in stages else []
                if "analyze" in stages:
                    self._analyze(targets, units)
            for stage in stages:
                if stage == "report":
                    self._report()
                if stage not in self.stages_done:
                    self.stages_done.append(stage)
        except (OSError, ScalingError):
            logger.error("[Sweep] Run aborted; writing partial manifest")
            try:
                self.write_manifest("partial")
            except OSError as e:
                logger.error("[Sweep] Could not write manifest: %s", e)
            raise

        status = "complete" if all(s in self.stages_done for s in STAGES) else "partial"
        self.write_manifest(status)
        return load_run_record(self.run_dir)

    # --- teachers -------------------------------------------------------

    def _teacher(self, label, build):
        path = self.path("teachers", f"{label}.json")
        if os.path.exists(path):
            try:
                return load_teacher(path)
            except (ValueError, KeyError, TypeError) as e:
                logger.warning("[Resume] Unreadable teacher %s (%s); rebuilding", path, e)
        teacher = build()
        save_teacher(teacher, path)
        return teacher

    def _base_teacher(self, k, *coords):
        t = self.cfg.teacher
        seed = derive_seed(self.cfg.seed, "teacher", k, *coords)
        if t.vetted:
            return vet_teachers(t.shape, k, t.candidates, t.vet_trials, seed=seed, workers=self.workers)
        return make_teacher(t.shape, k, seed)

    def _targets(self):
        cfg = self.cfg
        base_loss = LossKind.parse(cfg.training.loss)
        if cfg.kind == "ts_sweep":
            if cfg.teacher.file:
                loaded = load_teacher(cfg.teacher.file)
                label = f"k{loaded.feature_count}"
                teacher = self._teacher(label, lambda: loaded)
                return [SweepTarget(label, teacher, base_loss)]
            return [
                SweepTarget(f"k{k}", self._teacher(f"k{k}", lambda k=k: self._base_teacher(k)), base_loss)
                for k in cfg.teacher.features
            ]

        if cfg.kind == "pnorm_sweep":
            if cfg.teacher.file:
                shared = load_teacher(cfg.teacher.file)
            else:
                k = cfg.pnorm.features
                shared = self._teacher(f"k{k}", lambda: self._base_teacher(k))
            return [
                SweepTarget(f"p{format_number(p)}", shared, LossKind(PNORM, float(p)), power=float(p))
                for p in cfg.pnorm.powers
            ]

        targets, parts, offset = [], [], 0
        for i, k in enumerate(cfg.product.features):
            label = f"c{i}_k{k}"
            teacher = self._teacher(label, lambda k=k, i=i: self._base_teacher(k, "component", i))
            targets.append(SweepTarget(label, teacher, base_loss, role="component"))
            parts.append((teacher, (offset, offset + k)))
            offset += k
        product = self._teacher("product", lambda: product_teacher(parts))
        targets.append(SweepTarget("product", product, base_loss, role="product"))
        return targets

    # --- training -------------------------------------------------------

    def _unit_specs(self, targets):
        s = self.cfg.students
        specs = []
        for target in targets:
            for depth in s.depths:
                for width in s.widths:
                    for trial in range(self.cfg.trials.count):
                        specs.append((target, int(width), int(depth), trial))
        return specs

    def _unit_path(self, label, name, suffix=".json"):
        return self.path("units", label, name + suffix)

    def _load_unit(self, target, width, depth, trial, seed):
        path = self._unit_path(target.label, unit_name(width, depth, trial))
        if not os.path.exists(path):
            return None
        try:
            payload = read_json(path)
            unit = UnitResult.from_dict(payload["result"])
            if (unit.label, unit.width, unit.depth, unit.trial, unit.seed) != (target.label, width, depth, trial, seed):
                raise ValueError("checkpoint belongs to a different unit")
            if not unit.diverged:
                net = mlp_from_dict(payload["network"])
                if net.param_count != unit.n_params:
                    raise ValueError("parameter count mismatch")
                if not os.path.exists(self._unit_path(target.label, unit.name, "_trace.csv")):
                    raise ValueError("loss trace missing")
            return unit
        except (ValueError, KeyError, TypeError) as e:
            logger.warning("[Resume] Corrupt checkpoint %s (%s); retraining", path, e)
            return None

    def _run_unit(self, spec):
        target, width, depth, trial = spec
        seed = derive_seed(self.cfg.seed, "student", target.label, width, depth, trial)
        cached = self._load_unit(target, width, depth, trial, seed)
        if cached is not None:
            return cached

        sizes = [target.teacher.input_dim] + [width] * depth + [target.teacher.output_dim]
        student = init_mlp(sizes, seed, self.cfg.students.weight_scale_rule)
        data_seed = derive_seed(self.cfg.seed, "data", target.label, width, depth, trial)
        train_config = self.cfg.train_config(target.loss_kind, data_seed)
        name = unit_name(width, depth, trial)
        unit = UnitResult(target.label, width, depth, trial, student.param_count, seed, str(target.loss_kind))
        trace_path = self._unit_path(target.label, name, "_trace.csv")
        try:
            result = train(student, target.teacher, train_config)
        except TrainingFault as e:
            logger.warning("[Sweep] %s/%s diverged at step %s: %s", target.label, name, e.step, e)
            unit.diverged, unit.error = True, str(e)
            write_trace(trace_path, e.trace)
            write_json(self._unit_path(target.label, name), {"result": unit.to_dict()})
            return unit

        unit.final_loss = result.final_loss
        unit.final_excess = result.final_excess
        unit.excess_stderr = result.excess_stderr
        write_trace(trace_path, result.trace)
        save_checkpoint(result.net, self._unit_path(target.label, name), {"result": unit.to_dict()})
        logger.info("[Sweep] %s/%s N=%d loss=%.6g", target.label, name, unit.n_params, unit.curve_loss)
        return unit

    def _train(self, targets):
        specs = self._unit_specs(targets)
        logger.info("[Sweep] %d student units", len(specs))
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            units = list(pool.map(self._run_unit, specs))
        self.failures = [
            {"unit": f"{u.label}/{u.name}", "error": u.error} for u in units if u.diverged
        ]
        return units

    # --- analysis -------------------------------------------------------

    def _analyze(self, targets, units):
        summary_rows = []
        for target in targets:
            own = [u for u in units if u.label == target.label]
            summary_rows.append(self._analyze_target(target, own))
        path = self.path("analysis", "summary.csv")
        if not os.path.exists(path):
            write_csv(path, SUMMARY_HEADER, summary_rows)

    def _aggregate(self, units):
        """Loss curve over model sizes and the trials kept at each size."""
        trials = self.cfg.trials
        groups = {}
        for u in units:
            groups.setdefault((u.width, u.depth), []).append(u)
        points, kept = [], []
        for (width, depth), group in sorted(groups.items(), key=lambda item: (item[1][0].n_params, item[0])):
            group.sort(key=lambda u: u.trial)
            try:
                value, chosen = aggregate_trials([u.curve_loss for u in group], trials.policy, trials.keep, trials.exclude)
            except FitError:
                logger.warning("[Fit] Every trial diverged for width=%d depth=%d", width, depth)
                continue
            if not value > 0:
                logger.warning("[Fit] Non-positive loss %.3g for width=%d depth=%d; size dropped", value, width, depth)
                continue
            points.append(CurvePoint(group[0].n_params, value, width, depth))
            kept.extend(group[i] for i in chosen)
        return points, kept

    def _fit(self, curve):
        f = self.cfg.fit
        try:
            return fit_power_law(curve, hull=f.hull, n_min=f.n_min or None)
        except FitError as e:
            logger.info("[Fit] No power-law fit: %s", e)
            return None

    def _loss_threshold(self):
        return float(self.cfg.fit.loss_threshold or config.get("Fitting", {}).get("loss_threshold", 6e-3))

    def _fit_record(self, target, curve, fit):
        threshold = self._loss_threshold()
        record = {"label": target.label, "loss_threshold": threshold}
        try:
            n_max = n_max_at_loss_threshold(fit, threshold)
            record.update(fit.to_record(n_max.extrapolated))
            record["n_max_threshold"] = n_max.n_max
        except FitError as e:
            logger.warning("[Fit] %s: %s", target.label, e)
            record.update(fit.to_record())
            record["n_max_threshold"] = None
        record["n_max_empirical"] = n_max_empirical(curve, fit)
        return record

    def _activations(self, target, unit):
        path = self.path("activations", target.label, unit.name + ".csv")
        if os.path.exists(path):
            try:
                return load_cloud(path)
            except ValueError as e:
                logger.warning("[Resume] Unreadable activations %s (%s); recomputing", path, e)
        net, _ = load_checkpoint(self._unit_path(target.label, unit.name))
        rng = make_rng(derive_seed(self.cfg.seed, "vectors", target.label))
        _, prefinal = forward(net, target.teacher.sample_inputs(rng, self.cfg.id.vectors), capture=True)
        cloud = PointCloud(prefinal)
        if self.cfg.id.dump_activations:
            save_cloud(cloud, path)
        return cloud

    def _measure_ids(self, target, kept):
        path = self.path("analysis", target.label, "ids.csv")
        if os.path.exists(path):
            _, rows = read_csv(path)
            return {row[0]: (float(row[8]) if row[8] else None) for row in rows}

        s = self.cfg.id
        rows, ids = [], {}
        for unit in kept:
            if unit.diverged:
                continue
            try:
                est = estimate_id(self._activations(target, unit), method=s.method, k=s.k, search=s.search)
            except EstimationError as e:
                logger.warning("[ID] %s/%s: %s", target.label, unit.name, e)
                ids[unit.name] = None
                rows.append([unit.name, unit.width, unit.depth, unit.trial, unit.n_params, s.method, s.k, 0, "", ""])
                continue
            ids[unit.name] = est.d_hat
            logger.info("[ID] %s/%s N=%d d=%.3f", target.label, unit.name, unit.n_params, est.d_hat)
            rows.append([unit.name, unit.width, unit.depth, unit.trial, unit.n_params] + estimates_table([(unit.name, est)])[0][1:])
        write_csv(path, IDS_HEADER, rows)
        return ids

    def _diagnostics(self, target, reference):
        s = self.cfg.id
        base = self.path("analysis", target.label)
        outputs = {
            "id_vs_pointcount.csv": lambda cloud: write_csv(
                os.path.join(base, "id_vs_pointcount.csv"),
                ["n", "method", "k", "n_used", "d_hat", "fit_r2"],
                estimates_table(id_vs_pointcount(
                    cloud, s.k, s.counts or _default_counts(cloud.n),
                    seed=derive_seed(self.cfg.seed, "subsample", target.label), method=s.method,
                )),
            ),
            "id_vs_neighbors.csv": lambda cloud: write_csv(
                os.path.join(base, "id_vs_neighbors.csv"),
                ["k", "method", "k_used", "n_used", "d_hat", "fit_r2"],
                estimates_table(id_vs_neighbors(cloud, s.neighbors or DEFAULT_NEIGHBORS, method=s.method)),
            ),
            "mle_per_point.csv": lambda cloud: write_csv(
                os.path.join(base, "mle_per_point.csv"),
                ["unit", "d_point"],
                ([reference.name, v] for v in estimate_id_mle(cloud, k=s.mle_k, unbiased=True, search=s.search).per_point),
            ),
        }
        missing = [name for name in outputs if not os.path.exists(os.path.join(base, name))]
        if not missing:
            return
        cloud = self._activations(target, reference)
        for name in missing:
            try:
                outputs[name](cloud)
            except (EstimationError, ValueError) as e:
                logger.warning("[ID] %s: %s skipped (%s)", target.label, name, e)

    def _analyze_target(self, target, units):
        base = self.path("analysis", target.label)
        points, kept = self._aggregate(units)
        curve = LossCurve(points, str(target.loss_kind)) if points else None
        if curve is not None and not os.path.exists(os.path.join(base, "curve.csv")):
            save_curve(curve, os.path.join(base, "curve.csv"))

        fit = self._fit(curve) if curve is not None else None
        fit_record = self._fit_record(target, curve, fit) if fit is not None else None
        if fit_record is not None and not os.path.exists(os.path.join(base, "fit.json")):
            write_json(os.path.join(base, "fit.json"), fit_record)

        ids = self._measure_ids(target, kept)
        if self.cfg.id.dump_activations:
            for unit in kept:
                if not unit.diverged and not os.path.exists(self.path("activations", target.label, unit.name + ".csv")):
                    logger.info("[Resume] Restoring activations for %s/%s", target.label, unit.name)
                    self._activations(target, unit)
        in_range = [
            u for u in kept
            if ids.get(u.name) is not None and (fit is None or fit.fit_range[0] <= u.n_params <= fit.fit_range[1])
        ]
        values = np.array([ids[u.name] for u in in_range], dtype=np.float64)
        d_hat = float(np.mean(values)) if values.size else None
        d_std = float(np.std(values, ddof=1)) if values.size > 1 else None
        summary_path = os.path.join(base, "id_summary.json")
        if not os.path.exists(summary_path):
            write_json(summary_path, {
                "label": target.label,
                "method": self.cfg.id.method,
                "k": self.cfg.id.k,
                "d_hat": d_hat,
                "d_hat_std": d_std,
                "students": len(in_range),
                "within_fit_range": fit is not None,
            })
        if in_range:
            self._diagnostics(target, max(in_range, key=lambda u: (u.n_params, -u.trial)))

        alpha = fit.alpha if fit is not None else None
        return [
            target.label,
            target.role,
            target.feature_count,
            str(target.loss_kind),
            _blank(target.power),
            _blank(alpha),
            _blank(fit.alpha_stderr if fit is not None else None),
            _blank(fit.c if fit is not None else None),
            _blank(fit.n_points_used if fit is not None else None),
            _blank(4.0 / alpha if alpha and alpha > 0 else None),
            _blank(d_hat),
            _blank(d_std),
            _blank(fit_record.get("n_max_threshold") if fit_record else None),
            _blank(fit_record.get("extrapolated") if fit_record else None),
            _blank(fit_record.get("n_max_empirical") if fit_record else None),
        ]

    # --- other kinds ----------------------------------------------------

    def _synthetic_one(self, job):
        manifold, d = job
        s = self.cfg.synthetic
        path = self.path("analysis", "synthetic", f"{manifold}_d{d}.csv")
        if os.path.exists(path):
            return
        cloud = sample_manifold(manifold, d, s.n, derive_seed(self.cfg.seed, "synthetic", manifold, d))
        counts = s.counts or _default_counts(s.n)
        rows = []
        for method in s.methods:
            k = s.k if method == KNN_CUMULATIVE else s.mle_k
            profile = id_vs_pointcount(cloud, k, counts, seed=derive_seed(self.cfg.seed, "subsample", manifold, d), method=method)
            rows.extend(estimates_table(profile))
            if profile:
                logger.info("[ID] %s d=%d %s: %.3f at n=%d", manifold, d, method, profile[-1][1].d_hat, profile[-1][0])
        write_csv(path, SYNTHETIC_HEADER, rows)

    def _synthetic(self):
        s = self.cfg.synthetic
        jobs = [(m, int(d)) for m in s.manifolds for d in s.dims]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            list(pool.map(self._synthetic_one, jobs))

    def _vetting(self):
        t = self.cfg.teacher
        rows = []
        for k in t.features:
            label = f"k{k}"
            seed = derive_seed(self.cfg.seed, "teacher", k)
            teacher = self._teacher(
                label, lambda k=k, seed=seed: vet_teachers(t.shape, k, t.candidates, t.vet_trials, seed=seed, workers=self.workers)
            )
            rows.append([label, k, teacher.spec.seed, _blank(teacher.spec.vetting_score)])
        path = self.path("analysis", "vetting.csv")
        if not os.path.exists(path):
            write_csv(path, ["label", "k", "seed", "score"], rows)

    def _report(self):
        # figures imports matplotlib; keep it off the training path
        from experiment.figures import render_all

        render_all(self.run_dir, self.cfg.kind)


def _default_counts(n):
    return sorted({max(2, n // 8), max(2, n // 4), max(2, n // 2), n})


def read_manifest(run_dir):
    path = os.path.join(run_dir, MANIFEST)
    if not os.path.exists(path):
        raise ConfigError(f"{run_dir} has no {MANIFEST}")
    try:
        manifest = read_json(path)
    except ValueError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from None
    for key in ("config_hash", "config"):
        if key not in manifest:
            raise ConfigError(f"{path} is missing '{key}'")
    return manifest


def run_experiment(cfg, stages=STAGES, workers=None):
    return ExperimentRunner(cfg, workers).run(stages)


def resume(run_dir, cfg=None, stages=STAGES, workers=None):
    """
    Finish or repair a run from its manifest: completed units are kept, missing or corrupt
    artifacts are recomputed. `cfg`, when given, must match the config the run was started with.
    """
    manifest = read_manifest(run_dir)
    stored = manifest["config"]
    if cfg is not None and cfg.config_hash() != manifest["config_hash"]:
        diff = config_diff(stored, cfg.to_dict())
        raise ConfigError(f"config does not match the run in {run_dir} ({len(diff)} differences)", diff=diff)
    restored = config_from_dict(stored).with_output_dir(run_dir)
    if restored.config_hash() != manifest["config_hash"]:
        raise ConfigError(f"{run_dir}/{MANIFEST}: config snapshot does not match its hash")
    return run_experiment(restored, stages, workers)


def _unit_ids(path):
    if not os.path.exists(path):
        return {}
    try:
        _, rows = read_csv(path)
        return {row[0]: float(row[8]) for row in rows if row[8]}
    except (ValueError, IndexError) as e:
        logger.warning("[Resume] Unreadable %s (%s)", path, e)
        return {}


def load_run_record(run_dir):
    manifest = read_manifest(run_dir)
    record = RunRecord(
        run_dir=run_dir,
        config_hash=manifest["config_hash"],
        kind=manifest.get("kind", ""),
        status=manifest.get("status", ""),
        failures=list(manifest.get("failures", [])),
        created=manifest.get("created", ""),
        updated=manifest.get("updated", ""),
    )
    units_dir = os.path.join(run_dir, "units")
    for label in sorted(os.listdir(units_dir)) if os.path.isdir(units_dir) else []:
        ids = _unit_ids(os.path.join(run_dir, "analysis", label, "ids.csv"))
        for name in sorted(os.listdir(os.path.join(units_dir, label))):
            if name.endswith(".json"):
                try:
                    unit = UnitResult.from_dict(read_json(os.path.join(units_dir, label, name))["result"])
                except (ValueError, KeyError, TypeError):
                    logger.warning("[Resume] Skipping unreadable unit %s/%s", label, name)
                    continue
                unit.checkpoint = f"units/{label}/{name}"
                dump = f"activations/{label}/{unit.name}.csv"
                if os.path.exists(os.path.join(run_dir, dump)):
                    unit.activations = dump
                unit.d_hat = ids.get(unit.name)
                record.units.append(unit)
    analysis_dir = os.path.join(run_dir, "analysis")
    for label in sorted(os.listdir(analysis_dir)) if os.path.isdir(analysis_dir) else []:
        for name, target in (("fit.json", record.fits), ("id_summary.json", record.ids)):
            path = os.path.join(analysis_dir, label, name)
            if os.path.exists(path):
                target[label] = read_json(path)
    return record
