from dataclasses import dataclass

import numpy as np

from utils.config import config

DEFAULT_RADIUS_CAP = 1e12
DEFAULT_COLLINEAR_TOL = 1e-9


@dataclass(frozen=True)
class CircleFit:
    center: tuple
    radius: float
    collinear: bool


def fit_circle(x, y, radius_cap=None, collinear_tol=None):
    """
    Algebraic (Kasa) least-squares circle: solve x² + y² = a·x + b·y + c.
    Coordinates are centred and scaled first; collinear points get the capped radius.
    """
    settings = config.get("Fitting", {})
    radius_cap = float(radius_cap or settings.get("radius_cap", DEFAULT_RADIUS_CAP))
    collinear_tol = float(collinear_tol or settings.get("collinear_tol", DEFAULT_COLLINEAR_TOL))

    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 3:
        raise ValueError("circle fit needs at least 3 points")

    x_mean, y_mean = x.mean(), y.mean()
    scale = max(np.max(np.abs(x - x_mean)), np.max(np.abs(y - y_mean)))
    if scale == 0:
        raise ValueError("circle fit needs distinct points")
    u = (x - x_mean) / scale
    v = (y - y_mean) / scale

    sv = np.linalg.svd(np.column_stack([u, v]), compute_uv=False)
    if sv[-1] <= collinear_tol * sv[0]:
        return CircleFit((np.nan, np.nan), radius_cap, True)

    design = np.column_stack([u, v, np.ones_like(u)])
    (a, b, c), *_ = np.linalg.lstsq(design, u * u + v * v, rcond=None)
    uc, vc = a / 2.0, b / 2.0
    radius = np.sqrt(c + uc * uc + vc * vc) * scale
    if not np.isfinite(radius) or radius > radius_cap:
        radius = radius_cap
    return CircleFit((x_mean + uc * scale, y_mean + vc * scale), float(radius), False)
