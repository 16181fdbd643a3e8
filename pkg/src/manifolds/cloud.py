from dataclasses import dataclass

import numpy as np

from utils.errors import CloudFormatError


@dataclass(frozen=True)
class PointCloud:
    """An ordered set of n points in D ambient dimensions. Immutable once built."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise CloudFormatError(f"point cloud must be a 2-D array with at least one column, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise CloudFormatError(f"fewer than 2 points ({pts.shape[0]})")
        if not np.all(np.isfinite(pts)):
            bad = int(np.argwhere(~np.isfinite(pts))[0][0])
            raise CloudFormatError("non-finite value", row=bad)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def subset(self, indices):
        return PointCloud(self.points[np.asarray(indices)])

    def scaled(self, factor):
        return PointCloud(self.points * float(factor))
