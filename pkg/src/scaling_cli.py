import argparse
import json
import logging
import sys

from utils.errors import CloudFormatError, ConfigError, MissingRecordsError, ScalingError, TrainingFault

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class ScalingArgumentParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; usage errors here are status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _print_json(payload):
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_sample(args):
    from manifolds.cloud_io import save_cloud
    from manifolds.synth import sample_manifold

    cloud = sample_manifold(args.manifold, args.dim, args.n, args.seed)
    save_cloud(cloud, args.out)
    print(f"Wrote {cloud.n} points ({cloud.dim} dims) to {args.out}")


def cmd_estimate_id(args):
    from estimation.intrinsic_dim import KNN_CUMULATIVE, estimate_id
    from manifolds.cloud_io import load_cloud
    from utils.files import write_csv, write_json

    cloud = load_cloud(args.cloud)
    kwargs = {"search": args.search}
    if args.method == KNN_CUMULATIVE:
        kwargs["discard_fraction"] = args.discard
    est = estimate_id(cloud, method=args.method, k=args.k, **kwargs)
    record = est.to_record()
    record["excluded"] = est.excluded
    if args.out:
        write_json(args.out, record)
    if args.per_point:
        if est.per_point is None:
            logger.warning("[ID] --per-point needs an MLE method; nothing written")
        else:
            write_csv(args.per_point, ["d_point"], ([v] for v in est.per_point))
    _print_json(record)


def cmd_vet(args):
    from teachers.teacher import save_teacher
    from teachers.vetting import vet_teachers

    teacher = vet_teachers(args.shape, args.features, args.candidates, args.trials, seed=args.seed, workers=args.workers)
    save_teacher(teacher, args.out)
    _print_json({"seed": teacher.spec.seed, "score": teacher.spec.vetting_score, "path": args.out})


def _load(args):
    from experiment.config import load_experiment_config

    cfg = load_experiment_config(args.config)
    return cfg.with_output_dir(args.out) if args.out else cfg


def _record_summary(record):
    return {
        "run_dir": record.run_dir,
        "config_hash": record.config_hash,
        "status": record.status,
        "units": len(record.units),
        "failures": len(record.failures),
        "fits": {label: fit.get("alpha") for label, fit in record.fits.items()},
        "ids": {label: summary.get("d_hat") for label, summary in record.ids.items()},
    }


def cmd_sweep(args):
    from experiment.runner import run_experiment

    _print_json(_record_summary(run_experiment(_load(args), stages=("train",), workers=args.workers)))


def cmd_run(args):
    from experiment.runner import run_experiment

    _print_json(_record_summary(run_experiment(_load(args), workers=args.workers)))


def cmd_resume(args):
    from experiment.config import load_experiment_config
    from experiment.runner import resume

    cfg = load_experiment_config(args.config) if args.config else None
    _print_json(_record_summary(resume(args.run_dir, cfg, workers=args.workers)))


def cmd_fit(args):
    from analysis.power_law import fit_power_law, load_curve, n_max_at_loss_threshold, n_max_empirical
    from utils.config import config
    from utils.files import write_json

    curve = load_curve(args.curve)
    fit = fit_power_law(curve, hull=not args.no_hull, n_min=args.n_min)
    threshold = args.threshold
    if threshold is None:
        threshold = config.get("Fitting", {}).get("loss_threshold", 6e-3)
    n_max = n_max_at_loss_threshold(fit, threshold)
    record = fit.to_record(n_max.extrapolated)
    record.update({
        "loss_threshold": threshold,
        "n_max_threshold": n_max.n_max,
        "n_max_empirical": n_max_empirical(curve, fit),
    })
    if args.out:
        write_json(args.out, record)
    _print_json(record)


def cmd_report(args):
    from experiment.figures import report

    for path in report(args.run_dir, args.figure):
        print(path)


def build_parser():
    from estimation.intrinsic_dim import KNN_CUMULATIVE, METHODS
    from experiment.figures import FIGURES
    from manifolds.synth import SAMPLERS

    parser = ScalingArgumentParser(prog="scaling", description="Scaling exponents vs intrinsic dimension.")
    sub = parser.add_subparsers(dest="command", parser_class=ScalingArgumentParser)
    sub.required = True

    p = sub.add_parser("sample", help="Sample a synthetic manifold to CSV")
    p.add_argument("--manifold", choices=sorted(SAMPLERS), default="hypercube")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate-id", help="Estimate the intrinsic dimension of a point-cloud CSV")
    p.add_argument("cloud")
    p.add_argument("--method", choices=METHODS, default=KNN_CUMULATIVE)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--discard", type=float, default=0.0, help="Fraction of largest ratios dropped (knn only)")
    p.add_argument("--search", choices=["brute", "kdtree"], default=None)
    p.add_argument("--out", help="Write the estimate record as JSON")
    p.add_argument("--per-point", help="Write per-point MLE values as CSV")
    p.set_defaults(func=cmd_estimate_id)

    p = sub.add_parser("vet", help="Pick the least linear of many random teachers")
    p.add_argument("--shape", type=_int_list, required=True, help="Layer sizes, e.g. 9,240,240,2")
    p.add_argument("--features", type=int, required=True)
    p.add_argument("--candidates", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vet)

    for name, func, text in (
        ("sweep", cmd_sweep, "Train the student sweep of an experiment config"),
        ("run", cmd_run, "Run the full pipeline of an experiment config"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        p.add_argument("--out", help="Run directory (overrides output_dir)")
        p.add_argument("--workers", type=int, default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("resume", help="Finish or repair a run directory")
    p.add_argument("run_dir")
    p.add_argument("--config", help="Refuse to resume unless the run used this config")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("fit", help="Fit a power law to a loss-curve CSV")
    p.add_argument("curve")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--n-min", type=int, default=None)
    p.add_argument("--no-hull", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="Render figure CSVs and plots from a run directory")
    p.add_argument("run_dir")
    p.add_argument("--figure", choices=sorted(FIGURES) + ["all"], default="all")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    try:
        args.func(args)
    except (ConfigError, CloudFormatError, MissingRecordsError) as e:
        print(f"Error: {e}", file=sys.stderr)
        for line in getattr(e, "diff", []):
            print(f"  {line}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TrainingFault, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except ScalingError as e:
        # estimation or fitting could not produce a result from valid input
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
