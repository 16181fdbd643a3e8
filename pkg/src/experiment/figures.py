"""Plot-ready CSVs and static PNGs for the figure families of a run directory."""
import glob
import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from analysis.power_law import PowerLawFit, load_curve  # noqa: E402
from analysis.reports import alpha_vs_dimension_report, alpha_vs_p_report, n_max_trend  # noqa: E402
from utils.config import config  # noqa: E402
from utils.errors import FitError, MissingRecordsError  # noqa: E402
from utils.files import read_csv, read_json, write_csv, write_json  # noqa: E402

logger = logging.getLogger(__name__)

FIGURE_DIR = "figures"

# record kind -> glob pattern relative to the run directory
RECORDS = {
    "manifest": "manifest.json",
    "summary": "analysis/summary.csv",
    "curves": "analysis/*/curve.csv",
    "synthetic": "analysis/synthetic/*.csv",
    "mle_per_point": "analysis/*/mle_per_point.csv",
    "id_vs_pointcount": "analysis/*/id_vs_pointcount.csv",
    "id_vs_neighbors": "analysis/*/id_vs_neighbors.csv",
}

KIND_FIGURES = {
    "synthetic_id": ["fig12"],
    "ts_sweep": ["fig2", "fig4", "fig7", "fig10", "fig13", "fig14", "fig16"],
    "pnorm_sweep": ["fig4", "fig6", "fig13", "fig14", "fig16"],
    "product_manifold": ["fig4", "fig5", "fig13", "fig14", "fig16"],
    "vetting": [],
}


def _num(text):
    if text is None or text == "":
        return None
    return float(text)


def _table(path):
    header, rows = read_csv(path)
    return [dict(zip(header, row)) for row in rows]


def _summary(run_dir):
    return _table(os.path.join(run_dir, RECORDS["summary"]))


def _labelled(run_dir, name):
    """[(label, path)] for analysis/<label>/<name>, sorted by label."""
    paths = sorted(glob.glob(os.path.join(run_dir, "analysis", "*", name)))
    return [(os.path.basename(os.path.dirname(p)), p) for p in paths]


def _fig2(run_dir, ax):
    rows, entries = [], []
    for r in _summary(run_dir):
        d_hat, n_max = _num(r["d_hat"]), _num(r["n_max_threshold"])
        if d_hat is None or n_max is None:
            continue
        extrapolated = r["n_max_extrapolated"] == "1"
        rows.append([r["label"], d_hat, n_max, extrapolated])
        entries.append((d_hat, n_max))
        ax.scatter([d_hat], [n_max], facecolors="none" if extrapolated else "C0", edgecolors="C0")
        ax.annotate(r["label"], (d_hat, n_max), fontsize=8)
    ax.set_yscale("log")
    ax.set_xlabel("measured intrinsic dimension")
    ax.set_ylabel("N_max at loss threshold")
    extras = {}
    if len(entries) >= 2:
        extras["fig2_trend.json"] = {"spearman_log_n_max_vs_d": n_max_trend(entries)}
    return ["label", "d_hat", "n_max_threshold", "extrapolated"], rows, extras


def _fig4(run_dir, ax):
    rows = []
    for label, path in _labelled(run_dir, "curve.csv"):
        curve = load_curve(path)
        fit_path = os.path.join(os.path.dirname(path), "fit.json")
        fit = PowerLawFit.from_record(read_json(fit_path)) if os.path.exists(fit_path) else None
        fitted = fit.predict(curve.n) if fit is not None else [None] * len(curve)
        for n, loss, l_fit in zip(curve.n, curve.loss, fitted):
            rows.append([label, int(n), loss, "" if l_fit is None else float(l_fit)])
        line = ax.plot(curve.n, curve.loss, "o", label=label)[0]
        if fit is not None:
            grid = np.geomspace(fit.fit_range[0], fit.fit_range[1], 50)
            ax.plot(grid, fit.predict(grid), "-", color=line.get_color(), alpha=0.7)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("parameters N")
    ax.set_ylabel("loss L")
    ax.legend(fontsize=8)
    return ["label", "N", "L", "L_fit"], rows, {}


def _fig5(run_dir, ax):
    rows, component_sum = [], 0.0
    for r in _summary(run_dir):
        d_hat, inv_alpha = _num(r["d_hat"]), _num(r["four_over_alpha"])
        rows.append([r["label"], r["role"], "" if d_hat is None else d_hat, "" if inv_alpha is None else inv_alpha])
        if r["role"] == "component" and d_hat is not None:
            component_sum += d_hat
    rows.append(["sum_of_components", "derived", component_sum, ""])
    labels = [row[0] for row in rows]
    x = np.arange(len(labels))
    ax.bar(x - 0.2, [row[2] or 0.0 for row in rows], 0.4, label="measured ID")
    ax.bar(x + 0.2, [row[3] or 0.0 for row in rows], 0.4, label="4/alpha")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, fontsize=8)
    ax.legend(fontsize=8)
    return ["label", "role", "d_hat", "four_over_alpha"], rows, {}


def _fig6(run_dir, ax):
    entries, rows = [], []
    for r in _summary(run_dir):
        p, alpha = _num(r["power"]), _num(r["alpha"])
        if p is None or alpha is None:
            continue
        entries.append((p, alpha))
        rows.append([p, alpha, r["alpha_stderr"]])
    if len(entries) < 2:
        raise FitError("need fitted exponents for at least two loss powers")
    report = alpha_vs_p_report(entries)
    p = np.array([e[0] for e in entries])
    ax.plot(p, [e[1] for e in entries], "o")
    grid = np.linspace(0.0, p.max() * 1.05, 20)
    ax.plot(grid, report.line.intercept + report.line.slope * grid, "-", label="least squares")
    ax.plot(grid, report.origin_slope * grid, "--", label="through origin")
    ax.set_xlabel("loss power p")
    ax.set_ylabel("alpha")
    ax.legend(fontsize=8)
    return ["p", "alpha", "alpha_stderr"], rows, {"fig6_fit.json": report.to_record()}


def _fig7(run_dir, ax):
    entries = []
    for r in _summary(run_dir):
        d_hat, alpha = _num(r["d_hat"]), _num(r["alpha"])
        if d_hat is None or alpha is None or alpha <= 0:
            continue
        entries.append((int(r["feature_count"]), d_hat, alpha))
    if len(entries) < 2:
        raise FitError("need fitted exponents and IDs for at least two teachers")
    report = alpha_vs_dimension_report(entries)
    data = np.array(report.rows, dtype=np.float64)
    ax.plot(data[:, 1], data[:, 3], "o", label="vs measured ID")
    ax.plot(data[:, 0], data[:, 3], "s", label="vs features k")
    top = max(data[:, 0].max(), data[:, 1].max()) * 1.1
    ax.plot([0, top], [0, top], ":", color="grey")
    ax.set_xlabel("dimension")
    ax.set_ylabel("4/alpha")
    ax.legend(fontsize=8)
    return ["k", "d_hat", "alpha", "four_over_alpha"], report.rows, {"fig7_fit.json": report.to_record()}


def _fig10(run_dir, ax):
    rows = []
    for r in _summary(run_dir):
        d_hat, n_max = _num(r["d_hat"]), _num(r["n_max_empirical"])
        if d_hat is None or n_max is None:
            continue
        rows.append([r["label"], d_hat, n_max])
        ax.scatter([d_hat], [n_max], color="C1")
        ax.annotate(r["label"], (d_hat, n_max), fontsize=8)
    ax.set_yscale("log")
    ax.set_xlabel("measured intrinsic dimension")
    ax.set_ylabel("empirical N_max")
    return ["label", "d_hat", "n_max_empirical"], rows, {}


def _fig12(run_dir, ax):
    rows = []
    for path in sorted(glob.glob(os.path.join(run_dir, RECORDS["synthetic"]))):
        manifold, _, d = os.path.splitext(os.path.basename(path))[0].rpartition("_d")
        series = {}
        for r in _table(path):
            rows.append([manifold, int(d), int(r["n"]), r["method"], int(r["k"]), float(r["d_hat"])])
            series.setdefault(r["method"], []).append((int(r["n"]), float(r["d_hat"])))
        for method, points in series.items():
            points.sort()
            ax.plot([p[0] for p in points], [p[1] for p in points], "o-", label=f"{manifold} d={d} {method}")
    ax.set_xscale("log")
    ax.set_xlabel("number of points")
    ax.set_ylabel("estimated ID")
    ax.legend(fontsize=6)
    return ["manifold", "d", "n", "method", "k", "d_hat"], rows, {}


def _fig13(run_dir, ax):
    rows = []
    for label, path in _labelled(run_dir, "mle_per_point.csv"):
        values = np.array([float(r["d_point"]) for r in _table(path)])
        counts, edges = np.histogram(values, bins=30)
        rows.extend([label, float(lo), float(hi), int(c)] for lo, hi, c in zip(edges[:-1], edges[1:], counts))
        ax.stairs(counts, edges, label=label)
    ax.set_xlabel("per-point MLE dimension")
    ax.set_ylabel("count")
    ax.legend(fontsize=8)
    return ["label", "bin_left", "bin_right", "count"], rows, {}


def _profile(run_dir, ax, name, key, xlabel):
    rows = []
    for label, path in _labelled(run_dir, name):
        points = [(int(r[key]), float(r["d_hat"])) for r in _table(path)]
        rows.extend([label, x, y] for x, y in points)
        ax.plot([p[0] for p in points], [p[1] for p in points], "o-", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("estimated ID")
    ax.legend(fontsize=8)
    return ["label", key, "d_hat"], rows, {}


def _fig14(run_dir, ax):
    ax.set_xscale("log")
    return _profile(run_dir, ax, "id_vs_pointcount.csv", "n", "number of activation vectors")


def _fig16(run_dir, ax):
    return _profile(run_dir, ax, "id_vs_neighbors.csv", "k", "neighbors k")


FIGURES = {
    "fig2": (_fig2, ["summary"]),
    "fig4": (_fig4, ["curves"]),
    "fig5": (_fig5, ["summary"]),
    "fig6": (_fig6, ["summary"]),
    "fig7": (_fig7, ["summary"]),
    "fig10": (_fig10, ["summary"]),
    "fig12": (_fig12, ["synthetic"]),
    "fig13": (_fig13, ["mle_per_point"]),
    "fig14": (_fig14, ["id_vs_pointcount"]),
    "fig16": (_fig16, ["id_vs_neighbors"]),
}


def missing_records(run_dir, figure):
    _, needs = FIGURES[figure]
    return [f"{kind} ({RECORDS[kind]})" for kind in needs if not glob.glob(os.path.join(run_dir, RECORDS[kind]))]


def render(run_dir, figure):
    """Writes figures/<figure>.csv and .png (plus any fit JSON); returns the written paths."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; expected one of {sorted(FIGURES)}")
    missing = missing_records(run_dir, figure)
    if missing:
        raise MissingRecordsError(f"{figure} needs records missing from {run_dir}", missing)

    draw, _ = FIGURES[figure]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        header, rows, extras = draw(run_dir, ax)
        out_dir = os.path.join(run_dir, FIGURE_DIR)
        written = [os.path.join(out_dir, f"{figure}.csv"), os.path.join(out_dir, f"{figure}.png")]
        write_csv(written[0], header, rows)
        ax.set_title(figure)
        fig.tight_layout()
        fig.savefig(written[1], dpi=config.get("Reports", {}).get("dpi", 120), metadata={"Software": None})
        for name, payload in extras.items():
            written.append(os.path.join(out_dir, name))
            write_json(written[-1], payload)
    finally:
        plt.close(fig)
    logger.info("[Report] %s: %d rows", figure, len(rows))
    return written


def report(run_dir, figure="all"):
    """
    Render one figure, or every figure that applies to the run's kind ("all").
    Missing inputs raise MissingRecordsError naming each absent record kind.
    """
    if figure != "all":
        return render(run_dir, figure)

    manifest_path = os.path.join(run_dir, RECORDS["manifest"])
    if not os.path.exists(manifest_path):
        missing = [f"manifest ({RECORDS['manifest']})"]
        for name in FIGURES:
            missing.extend(m for m in missing_records(run_dir, name) if m not in missing)
        raise MissingRecordsError(f"nothing to report in {run_dir}", missing)

    names = KIND_FIGURES.get(read_json(manifest_path).get("kind"), list(FIGURES))
    written, missing = [], []
    for name in names:
        absent = missing_records(run_dir, name)
        if absent:
            missing.extend(m for m in absent if m not in missing)
            continue
        try:
            written.extend(render(run_dir, name))
        except FitError as e:
            logger.warning("[Report] Skipping %s: %s", name, e)
    if names and not written:
        raise MissingRecordsError(f"no figure could be rendered from {run_dir}", missing)
    return written


def render_all(run_dir, kind):
    written = []
    for name in KIND_FIGURES.get(kind, []):
        if missing_records(run_dir, name):
            logger.warning("[Report] Skipping %s: %s", name, ", ".join(missing_records(run_dir, name)))
            continue
        try:
            written.extend(render(run_dir, name))
        except FitError as e:
            logger.warning("[Report] Skipping %s: %s", name, e)
    return written
