import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from estimation.neighbors import neighbor_ratios
from utils.errors import EstimationError
from utils.seeds import make_rng

logger = logging.getLogger(__name__)

KNN_CUMULATIVE = "knn_cumulative"
MLE_BIASED = "mle_biased"
MLE_UNBIASED = "mle_unbiased"
METHODS = (KNN_CUMULATIVE, MLE_BIASED, MLE_UNBIASED)


@dataclass
class IdEstimate:
    d_hat: float
    method: str
    k: int
    n_used: int
    excluded: int = 0
    fit_r2: Optional[float] = None
    per_point: Optional[np.ndarray] = field(default=None, repr=False)

    def to_record(self):
        return {
            "method": self.method,
            "k": int(self.k),
            "n_used": int(self.n_used),
            "d_hat": float(self.d_hat),
            "fit_r2": None if self.fit_r2 is None else float(self.fit_r2),
        }


def _check_estimate(d_hat, method):
    if not np.isfinite(d_hat) or d_hat <= 0:
        raise EstimationError(f"{method} produced a non-positive or non-finite dimension ({d_hat})")
    return float(d_hat)


def knn_estimate_from_ratios(ratios, discard_fraction=0.0):
    """
    Cumulative k-neighbor estimator. With C_i = i/(n+1) over the sorted μ_k,
    regress y = log(1 - C^(1/(k-1))) on x = log μ_k through the origin; d = -slope.
    k = 2 is TwoNN.
    """
    k = ratios.k
    mu = np.sort(ratios.mu(k))
    n = mu.shape[0]
    cdf = np.arange(1, n + 1, dtype=np.float64) / (n + 1)
    x = np.log(mu)
    y = np.log1p(-cdf ** (1.0 / (k - 1)))

    if discard_fraction:
        keep = int(np.floor(n * (1.0 - float(discard_fraction))))
        x, y = x[:keep], y[:keep]

    sxx = float(np.dot(x, x))
    if sxx == 0.0:
        raise EstimationError("zero-variance cloud: every μ_k equals 1")
    slope = float(np.dot(x, y)) / sxx

    residual = y - slope * x
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    fit_r2 = 1.0 - float(np.dot(residual, residual)) / ss_tot if ss_tot > 0 else 1.0

    return IdEstimate(
        d_hat=_check_estimate(-slope, KNN_CUMULATIVE),
        method=KNN_CUMULATIVE,
        k=k,
        n_used=x.shape[0],
        excluded=ratios.excluded_count,
        fit_r2=fit_r2,
    )


def mle_estimate_from_ratios(ratios, unbiased=True):
    """
    Per point: (k-2 or k-1) / ((k-1) log μ_k - Σ_{j=2}^{k-1} log μ_j); the estimate is the mean.
    Points with a non-positive denominator are dropped and counted as excluded.
    """
    k = ratios.k
    if k < 3:
        raise EstimationError(f"MLE needs k >= 3, got {k}")
    logs = np.log(ratios.ratios)
    denominator = (k - 1) * logs[:, -1] - np.sum(logs[:, :-1], axis=1)
    good = denominator > 0
    dropped = int(np.count_nonzero(~good))
    if not np.any(good):
        raise EstimationError("no usable points: every MLE denominator is zero")
    if dropped:
        logger.info("[ID] MLE dropped %d points with degenerate neighborhoods", dropped)

    numerator = (k - 2) if unbiased else (k - 1)
    per_point = numerator / denominator[good]
    # fixed-order reduction keeps the mean independent of any parallel schedule
    d_hat = float(np.sum(per_point)) / per_point.shape[0]
    method = MLE_UNBIASED if unbiased else MLE_BIASED
    return IdEstimate(
        d_hat=_check_estimate(d_hat, method),
        method=method,
        k=k,
        n_used=int(per_point.shape[0]),
        excluded=ratios.excluded_count + dropped,
        per_point=per_point,
    )


def estimate_id_knn(cloud, k=2, discard_fraction=0.0, search=None):
    return knn_estimate_from_ratios(neighbor_ratios(cloud, k, search=search), discard_fraction)


def estimate_id_mle(cloud, k=100, unbiased=True, search=None):
    if int(k) < 3:
        raise EstimationError(f"MLE needs k >= 3, got {k}")
    return mle_estimate_from_ratios(neighbor_ratios(cloud, k, search=search), unbiased)


def estimate_id(cloud, method=KNN_CUMULATIVE, k=2, **kwargs):
    if method == KNN_CUMULATIVE:
        return estimate_id_knn(cloud, k, **kwargs)
    if method in (MLE_BIASED, MLE_UNBIASED):
        return estimate_id_mle(cloud, k, unbiased=(method == MLE_UNBIASED), **kwargs)
    raise ValueError(f"unknown ID method {method!r}; expected one of {METHODS}")


def id_vs_pointcount(cloud, k, counts, seed=0, method=KNN_CUMULATIVE):
    """
    ID profile over random subsamples (without replacement) of the cloud, sorted by count.
    Counts too small for k neighbors are skipped with a logged warning.
    """
    profile = []
    for count in sorted(set(int(c) for c in counts)):
        if count > cloud.n:
            raise ValueError(f"count {count} exceeds cloud size {cloud.n}")
        if count < k + 1:
            logger.warning("[ID] Skipping count %d: need at least k+1=%d points", count, k + 1)
            continue
        if count == cloud.n:
            sub = cloud
        else:
            rng = make_rng(seed)
            sub = cloud.subset(np.sort(rng.choice(cloud.n, size=count, replace=False)))
        profile.append((count, estimate_id(sub, method=method, k=k)))
    return profile


def id_vs_neighbors(cloud, ks, method=KNN_CUMULATIVE):
    profile = []
    for k in sorted(set(int(k) for k in ks)):
        if k >= cloud.n:
            logger.warning("[ID] Skipping k=%d: cloud has only %d points", k, cloud.n)
            continue
        profile.append((k, estimate_id(cloud, method=method, k=k)))
    return profile


def estimates_table(entries: List[tuple]):
    """Rows (key, method, k, n_used, d_hat, fit_r2) for CSV export."""
    rows = []
    for key, est in entries:
        rows.append([key, est.method, est.k, est.n_used, est.d_hat, "" if est.fit_r2 is None else est.fit_r2])
    return rows
