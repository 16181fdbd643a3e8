import numpy as np

from manifolds.cloud import PointCloud
from utils.seeds import make_rng


def _check_args(d, n):
    if int(d) < 1:
        raise ValueError(f"manifold dimension must be >= 1, got {d}")
    if int(n) < 2:
        raise ValueError(f"point count must be >= 2, got {n}")


def sample_hypercube(d, n, seed):
    """n i.i.d. points uniform on [0,1]^d (PCG64 stream seeded by `seed`)."""
    _check_args(d, n)
    rng = make_rng(seed)
    return PointCloud(rng.random((int(n), int(d))))


def sample_torus(d, n, seed):
    """
    d-torus embedded in 2d dimensions, one unit circle per factor.
    Columns (2i, 2i+1) hold (cos θ_i, sin θ_i) with θ_i uniform on [0, 2π).
    """
    _check_args(d, n)
    rng = make_rng(seed)
    theta = rng.random((int(n), int(d))) * (2.0 * np.pi)
    points = np.empty((int(n), 2 * int(d)))
    points[:, 0::2] = np.cos(theta)
    points[:, 1::2] = np.sin(theta)
    return PointCloud(points)


SAMPLERS = {
    "hypercube": sample_hypercube,
    "torus": sample_torus,
}


def sample_manifold(kind, d, n, seed):
    try:
        sampler = SAMPLERS[kind]
    except KeyError:
        raise ValueError(f"unknown manifold {kind!r}; expected one of {sorted(SAMPLERS)}") from None
    return sampler(d, n, seed)
