from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from utils.errors import FitError
from utils.files import write_csv

AGGREGATION_POLICIES = ("keep_lowest", "exclude_worst", "best")


def aggregate_trials(losses, policy="keep_lowest", keep=None, exclude=0):
    """
    One loss per model size from repeated trials. Non-finite losses rank as worst.
    keep_lowest: mean of the `keep` lowest; exclude_worst: mean without the `exclude` worst; best: minimum.
    Returns (aggregate, indices of the trials that entered it).
    """
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise FitError("no trials to aggregate")
    ranked = np.where(np.isfinite(losses), losses, np.inf)
    order = np.argsort(ranked, kind="stable")

    if policy == "best":
        chosen = order[:1]
    elif policy == "keep_lowest":
        count = losses.size if keep is None else int(keep)
        chosen = order[:max(1, min(count, losses.size))]
    elif policy == "exclude_worst":
        chosen = order[:max(1, losses.size - int(exclude))]
    else:
        raise ValueError(f"unknown aggregation policy {policy!r}; expected one of {AGGREGATION_POLICIES}")

    chosen = chosen[np.isfinite(ranked[chosen])]
    if chosen.size == 0:
        raise FitError("every trial diverged")
    return float(np.mean(losses[chosen])), sorted(int(i) for i in chosen)


@dataclass
class LineFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    r2: float


def _line(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.ptp(x) == 0:
        raise FitError("degenerate variance: need at least two distinct x values")
    r = stats.linregress(x, y)
    r2 = r.rvalue ** 2 if np.isfinite(r.rvalue) else 1.0
    return LineFit(float(r.slope), float(r.intercept), float(r.stderr), float(r.intercept_stderr), float(r2))


@dataclass
class AlphaDimensionReport:
    rows: list
    vs_id: LineFit
    vs_features: LineFit
    inverse_alpha_vs_features: LineFit

    def to_record(self):
        return {name: vars(getattr(self, name)) for name in ("vs_id", "vs_features", "inverse_alpha_vs_features")}

    def write_csv(self, path):
        write_csv(path, ["k", "d_hat", "alpha", "four_over_alpha"], self.rows)


def alpha_vs_dimension_report(results):
    """Least-squares lines of 4/α against measured ID and against feature count k."""
    if len(results) < 2:
        raise FitError("need at least 2 (k, d_hat, alpha) entries")
    k = np.array([r[0] for r in results], dtype=np.float64)
    d_hat = np.array([r[1] for r in results], dtype=np.float64)
    alpha = np.array([r[2] for r in results], dtype=np.float64)
    if np.any(alpha <= 0):
        raise FitError("every alpha must be positive")
    inv = 4.0 / alpha
    rows = [[int(ki), float(di), float(ai), float(fi)] for ki, di, ai, fi in zip(k, d_hat, alpha, inv)]
    return AlphaDimensionReport(rows, _line(d_hat, inv), _line(k, inv), _line(k, 1.0 / alpha))


@dataclass
class AlphaPowerReport:
    rows: list
    line: LineFit
    origin_slope: float
    ratio_4_to_2: Optional[float]

    def to_record(self):
        return {"line": vars(self.line), "origin_slope": self.origin_slope, "ratio_4_to_2": self.ratio_4_to_2}


def alpha_vs_p_report(results):
    """α against the loss power p; the prediction is a line through the origin with slope 2/d."""
    if len(results) < 2:
        raise FitError("need at least 2 (p, alpha) entries")
    p = np.array([r[0] for r in results], dtype=np.float64)
    alpha = np.array([r[1] for r in results], dtype=np.float64)
    by_p = dict(zip(p.tolist(), alpha.tolist()))
    ratio = by_p[4.0] / by_p[2.0] if 4.0 in by_p and 2.0 in by_p and by_p[2.0] != 0 else None
    return AlphaPowerReport(
        rows=[[float(pi), float(ai)] for pi, ai in zip(p, alpha)],
        line=_line(p, alpha),
        origin_slope=float(np.dot(p, alpha) / np.dot(p, p)),
        ratio_4_to_2=ratio,
    )


def n_max_trend(entries):
    """Spearman rank correlation of log N_max against measured ID, entries = [(d_hat, n_max)]."""
    if len(entries) < 2:
        raise FitError("need at least 2 (d_hat, n_max) entries")
    d_hat = np.array([e[0] for e in entries], dtype=np.float64)
    n_max = np.array([e[1] for e in entries], dtype=np.float64)
    rho = stats.spearmanr(d_hat, np.log(n_max)).correlation
    return float(rho)
