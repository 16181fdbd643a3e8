"""
Numerical checks of the piecewise-approximation picture behind the scaling relations:
piecewise polynomial regression on [0,1]^d loses |f - c|^p ∝ N^(-(order+1)p/d), and the KL loss of
optimal linear logits on a small cube of side s falls as s^4.
"""
import itertools

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import log_softmax, rel_entr, softmax
from scipy import stats


def _cube_quadrature(d, nodes, low, high):
    """Tensor Gauss-Legendre nodes (m, d) and weights (m,) on [low, high]^d; weights sum to 1."""
    t, w = leggauss(int(nodes))
    t = low + (t + 1.0) * 0.5 * (high - low)
    w = w / w.sum()
    points = np.array(list(itertools.product(t, repeat=d)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
    return points, weights


def predicted_exponent(d, order=1, p=2.0):
    return (order + 1) * float(p) / d


def piecewise_approximation_loss(f, d, cells_per_side, order=1, p=2.0, nodes=4):
    """
    Mean |f - c|^p over [0,1]^d where c is the per-cell least-squares polynomial of degree `order`
    (0: constant, 1: linear) on a grid of cells_per_side^d cubes.
    """
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order}")
    m = int(cells_per_side)
    side = 1.0 / m
    local, weights = _cube_quadrature(d, nodes, 0.0, side)
    corners = np.array(list(itertools.product(range(m), repeat=d)), dtype=np.float64) * side
    x = corners[:, None, :] + local[None, :, :]
    y = f(x.reshape(-1, d)).reshape(x.shape[0], x.shape[1])

    if order == 0:
        design = np.ones((local.shape[0], 1))
    else:
        design = np.column_stack([np.ones(local.shape[0]), (local - side / 2) / side])
    sw = np.sqrt(weights)[:, None]
    coef, *_ = np.linalg.lstsq(design * sw, (y * sw[:, 0]).T, rcond=None)
    fitted = (design @ coef).T
    err = np.abs(y - fitted) ** p
    return float(np.mean(err @ weights))


def toy_scaling_exponent(f, d, order=1, p=2.0, cells=(4, 8, 16, 32), nodes=4):
    """Fitted α for L(N) with N = cells · parameters per cell."""
    per_cell = 1 if order == 0 else d + 1
    n = np.array([c ** d * per_cell for c in cells], dtype=np.float64)
    losses = np.array([piecewise_approximation_loss(f, d, c, order, p, nodes) for c in cells])
    return -float(stats.linregress(np.log(n), np.log(losses)).slope)


def linear_logit_kl_loss(logit_fn, d, side, nodes=8, max_iter=50):
    """
    KL(f || softmax(c)) per unit volume on [-s/2, s/2]^d, where f = softmax(logit_fn(x)) and c is the
    KL-optimal linear logit model (Newton's method; the last logit is fixed at zero).
    """
    x, w = _cube_quadrature(d, nodes, -side / 2.0, side / 2.0)
    target_logits = logit_fn(x)
    f = softmax(target_logits, axis=1)
    classes = f.shape[1]
    phi = np.column_stack([np.ones(x.shape[0]), x / side])
    free = classes - 1

    # start from the least-squares fit of the logit differences
    diffs = target_logits[:, :free] - target_logits[:, free:]
    coef, *_ = np.linalg.lstsq(phi * np.sqrt(w)[:, None], diffs * np.sqrt(w)[:, None], rcond=None)

    def model_logits(c):
        return np.column_stack([phi @ c, np.zeros(x.shape[0])])

    for _ in range(max_iter):
        q = softmax(model_logits(coef), axis=1)[:, :free]
        grad = phi.T @ (w[:, None] * (q - f[:, :free]))
        cov = np.einsum("i,ia,ib->iab", w, q, q)
        block = np.einsum("i,ia->ia", w, q)
        hess = np.einsum("ip,iq,iab->paqb", phi, phi, -cov)
        hess += np.einsum("ip,iq,ia,ab->paqb", phi, phi, block, np.eye(free))
        size = phi.shape[1] * free
        step = np.linalg.solve(hess.reshape(size, size), grad.reshape(size)).reshape(coef.shape)
        coef = coef - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(coef))):
            break

    log_q = log_softmax(model_logits(coef), axis=1)
    per_point = np.sum(rel_entr(f, np.exp(log_q)), axis=1)
    return float(per_point @ w)


def kl_scaling_slope(logit_fn, d, sides=(0.2, 0.1, 0.05, 0.025), nodes=8):
    losses = [linear_logit_kl_loss(logit_fn, d, s, nodes) for s in sides]
    return float(stats.linregress(np.log(sides), np.log(losses)).slope)
