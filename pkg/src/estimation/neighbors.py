import logging
from dataclasses import dataclass

import numpy as np

from utils.config import config
from utils.errors import EstimationError

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_ELEMENTS = 1 << 23


@dataclass(frozen=True)
class NeighborRatios:
    """
    ratios[:, j-2] = r_j / r_1 for j = 2..k, one row per usable point.
    point_index maps rows back to cloud indices; excluded_count counts points with r_1 = 0.
    """

    ratios: np.ndarray
    k: int
    point_index: np.ndarray
    excluded_count: int

    @property
    def n_used(self):
        return self.ratios.shape[0]

    def mu(self, j):
        """Column of μ_j for j in 2..k."""
        if not 2 <= j <= self.k:
            raise ValueError(f"μ_{j} is not available for k={self.k}")
        return self.ratios[:, j - 2]


def _distances(points, rows, neighbor_idx):
    # Single formula shared by every search path so results agree bit-exactly.
    diff = points[neighbor_idx] - points[rows][:, None, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _brute_force_indices(points, k, block_elements):
    n, dim = points.shape
    rows_per_block = max(1, int(block_elements) // max(1, n * dim))
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, rows_per_block):
        stop = min(n, start + rows_per_block)
        diff = points[None, :, :] - points[start:stop, None, :]
        sq = np.sum(diff * diff, axis=-1)
        sq[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort: equal distances resolve to the lower point index
        order = np.argsort(sq, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


def _kdtree_indices(points, k):
    from scipy.spatial import cKDTree

    n = points.shape[0]
    tree = cKDTree(points)
    # one spare neighbor so ties at the boundary can be reordered by index
    extra = min(n, k + 2)
    _, idx = tree.query(points, k=extra)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        cand = idx[i][idx[i] != i]
        d = _distances(points, np.array([i]), cand[None, :])[0]
        order = np.lexsort((cand, d))
        out[i] = cand[order][:k]
    return out


def nearest_neighbors(points, k, search=None):
    """Indices (n, k) of the k nearest other points, ties broken by point index."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n <= k:
        raise EstimationError(f"need more than k={k} points, cloud has {n}")
    settings = config.get("Neighbors", {})
    search = search or settings.get("search", "brute")
    if search == "brute":
        return _brute_force_indices(points, k, settings.get("block_elements", DEFAULT_BLOCK_ELEMENTS))
    if search == "kdtree":
        return _kdtree_indices(points, k)
    raise ValueError(f"unknown neighbor search {search!r}; expected 'brute' or 'kdtree'")


def neighbor_ratios(cloud, k, search=None):
    """μ_j = r_j / r_1 for the k nearest neighbors of every point with r_1 > 0."""
    k = int(k)
    if k < 2:
        raise EstimationError(f"k must be >= 2, got {k}")
    if cloud.n <= k:
        raise EstimationError(f"need more than k={k} points, cloud has {cloud.n}")

    points = cloud.points
    idx = nearest_neighbors(points, k, search=search)
    dist = _distances(points, np.arange(cloud.n), idx)

    usable = dist[:, 0] > 0
    excluded = int(np.count_nonzero(~usable))
    if not np.any(usable):
        raise EstimationError("no usable points: every point has a duplicate at distance 0")
    if excluded:
        logger.info("[ID] Excluded %d points with zero nearest-neighbor distance", excluded)

    ratios = dist[usable, 1:] / dist[usable, :1]
    return NeighborRatios(
        ratios=ratios,
        k=k,
        point_index=np.flatnonzero(usable),
        excluded_count=excluded,
    )
