import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import stats

from analysis.circle import fit_circle
from utils.errors import FitError
from utils.files import read_csv, write_csv

logger = logging.getLogger(__name__)

CURVE_HEADER = ["N", "L", "width", "depth", "seed", "loss_kind"]


@dataclass(frozen=True)
class CurvePoint:
    n_params: int
    loss: float
    width: Optional[int] = None
    depth: Optional[int] = None
    seed: Optional[int] = None


@dataclass
class LossCurve:
    points: List[CurvePoint]
    loss_kind: str = ""

    def __post_init__(self):
        for p in self.points:
            if not p.n_params > 0:
                raise FitError(f"parameter count must be positive, got {p.n_params}")
            if not (np.isfinite(p.loss) and p.loss > 0):
                raise FitError(f"loss must be positive and finite, got {p.loss} at N={p.n_params}")
        self.points = sorted(self.points, key=lambda p: (p.n_params, p.loss))

    @property
    def n(self):
        return np.array([p.n_params for p in self.points], dtype=np.float64)

    @property
    def loss(self):
        return np.array([p.loss for p in self.points], dtype=np.float64)

    def __len__(self):
        return len(self.points)


@dataclass
class PowerLawFit:
    alpha: float
    c: float
    n_points_used: int
    max_radius: float
    fit_range: tuple
    residuals: List[float] = field(default_factory=list)
    alpha_stderr: float = 0.0
    log_c_stderr: float = 0.0
    radii: List[float] = field(default_factory=list)

    def predict(self, n):
        return self.c * np.asarray(n, dtype=np.float64) ** (-self.alpha)

    def to_record(self, extrapolated=None):
        record = {
            "alpha": float(self.alpha),
            "c": float(self.c),
            "n_points_used": int(self.n_points_used),
            "max_radius": float(self.max_radius),
            "fit_range": [float(self.fit_range[0]), float(self.fit_range[1])],
            "alpha_stderr": float(self.alpha_stderr),
            "log_c_stderr": float(self.log_c_stderr),
        }
        if extrapolated is not None:
            record["extrapolated"] = bool(extrapolated)
        return record

    @classmethod
    def from_record(cls, record):
        return cls(
            alpha=record["alpha"],
            c=record["c"],
            n_points_used=record["n_points_used"],
            max_radius=record["max_radius"],
            fit_range=tuple(record["fit_range"]),
            alpha_stderr=record.get("alpha_stderr", 0.0),
            log_c_stderr=record.get("log_c_stderr", 0.0),
        )


@dataclass(frozen=True)
class NMax:
    n_max: float
    extrapolated: bool


def convex_hull_filter(curve):
    """Best loss per N, then the lower convex hull in (log N, log L)."""
    if not curve.points:
        raise FitError("empty loss curve")
    best = {}
    for p in curve.points:
        if p.n_params not in best or p.loss < best[p.n_params].loss:
            best[p.n_params] = p
    pts = [best[n] for n in sorted(best)]

    hull = []
    for p in pts:
        x, y = np.log(p.n_params), np.log(p.loss)
        while len(hull) >= 2:
            x1, y1 = np.log(hull[-2].n_params), np.log(hull[-2].loss)
            x2, y2 = np.log(hull[-1].n_params), np.log(hull[-1].loss)
            # drop the middle point when it lies above the chord; collinear points stay
            lhs, rhs = (x2 - x1) * (y - y1), (y2 - y1) * (x - x1)
            if lhs - rhs < -1e-12 * (abs(lhs) + abs(rhs)):
                hull.pop()
            else:
                break
        hull.append(p)
    return LossCurve(hull, curve.loss_kind)


def prefix_radii(curve):
    """Circle radius r(n) in (log N, log L) for every prefix n = 3..len."""
    if len(curve) < 3:
        raise FitError(f"need at least 3 points to select a fit region, got {len(curve)}")
    x, y = np.log(curve.n), np.log(curve.loss)
    return [fit_circle(x[:n], y[:n]).radius for n in range(3, len(curve) + 1)]


def select_linear_prefix(curve, radii=None):
    """Prefix length with the largest fitted circle radius; ties go to the longer prefix."""
    if radii is None:
        radii = prefix_radii(curve)
    best = max(range(len(radii)), key=lambda i: (radii[i], i))
    return best + 3


def _fit_prefix(x, y):
    if np.ptp(x) == 0:
        raise FitError("zero variance in log N")
    result = stats.linregress(x, y)
    return result.slope, result.intercept, result.stderr, result.intercept_stderr


def fit_power_law(curve, hull=True, n_min=None):
    """
    log L = -α log N + b over the most linear prefix (circle criterion), starting at the smallest N
    (or the first N >= n_min).
    """
    if hull:
        curve = convex_hull_filter(curve)
    if n_min is not None:
        curve = LossCurve([p for p in curve.points if p.n_params >= n_min], curve.loss_kind)
    if len(curve) < 3:
        raise FitError(f"need at least 3 points to fit a power law, got {len(curve)}")

    radii = prefix_radii(curve)
    n_used = select_linear_prefix(curve, radii)
    x = np.log(curve.n[:n_used])
    y = np.log(curve.loss[:n_used])
    slope, intercept, slope_err, intercept_err = _fit_prefix(x, y)
    alpha = -float(slope)
    if not np.isfinite(alpha):
        raise FitError("power-law exponent is not finite")
    if alpha <= 0:
        logger.warning("[Fit] Loss does not fall with N over the fitted range (alpha=%.4g)", alpha)

    fit = PowerLawFit(
        alpha=alpha,
        c=float(np.exp(intercept)),
        n_points_used=n_used,
        max_radius=float(radii[n_used - 3]),
        fit_range=(float(curve.n[0]), float(curve.n[n_used - 1])),
        residuals=[float(r) for r in y - (slope * x + intercept)],
        alpha_stderr=float(slope_err),
        log_c_stderr=float(intercept_err),
        radii=[float(r) for r in radii],
    )
    logger.info("[Fit] alpha=%.4f c=%.4g over %d/%d points", fit.alpha, fit.c, n_used, len(curve))
    return fit


def n_max_at_loss_threshold(fit, loss_threshold):
    """N at which the fitted law reaches the threshold: (c / L)^(1/α)."""
    if not fit.alpha > 0:
        raise FitError(f"alpha must be positive, got {fit.alpha}")
    if not loss_threshold > 0:
        raise FitError(f"loss threshold must be positive, got {loss_threshold}")
    n_max = (fit.c / loss_threshold) ** (1.0 / fit.alpha)
    # relative slack so a threshold equal to the fitted loss at the last N is not flagged
    return NMax(float(n_max), bool(n_max > fit.fit_range[1] * (1.0 + 1e-9)))


def n_max_empirical(curve, fit):
    """Largest N inside the selected power-law prefix."""
    return float(fit.fit_range[1])


def save_curve(curve, path):
    rows = []
    for p in curve.points:
        rows.append([
            p.n_params,
            p.loss,
            "" if p.width is None else p.width,
            "" if p.depth is None else p.depth,
            "" if p.seed is None else p.seed,
            curve.loss_kind,
        ])
    write_csv(path, CURVE_HEADER, rows)


def load_curve(path):
    header, rows = read_csv(path)
    if not header or header[:2] != CURVE_HEADER[:2]:
        raise FitError(f"{path}: expected a header starting with N,L")
    col = {name: i for i, name in enumerate(header)}

    def optional_int(row, name):
        i = col.get(name)
        return int(row[i]) if i is not None and i < len(row) and row[i] != "" else None

    points, loss_kind = [], ""
    for row in rows:
        points.append(CurvePoint(
            n_params=int(float(row[0])),
            loss=float(row[1]),
            width=optional_int(row, "width"),
            depth=optional_int(row, "depth"),
            seed=optional_int(row, "seed"),
        ))
        if "loss_kind" in col and col["loss_kind"] < len(row):
            loss_kind = row[col["loss_kind"]]
    return LossCurve(points, loss_kind)
