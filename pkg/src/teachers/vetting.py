import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from teachers.teacher import make_teacher
from utils.config import config, worker_count
from utils.seeds import derive_seed, make_rng

logger = logging.getLogger(__name__)

R2_TARGETS = ("logit_diff", "first_logit")


@dataclass(frozen=True)
class VetResult:
    score: float
    constant_slices: int


def _vetting_defaults():
    return config.get("Vetting", {})


def _scalar_output(out, r2_target):
    if out.shape[1] >= 2 and r2_target == "logit_diff":
        return out[:, 0] - out[:, 1]
    return out[:, 0]


def _slice_r2(grid, y):
    """R² of y ~ a + b·grid along each row of y; constant rows count as perfectly linear."""
    g = grid - grid.mean()
    yc = y - y.mean(axis=1, keepdims=True)
    ss_tot = np.sum(yc * yc, axis=1)
    slope = (yc @ g) / np.dot(g, g)
    resid = yc - slope[:, None] * g[None, :]
    ss_res = np.sum(resid * resid, axis=1)
    constant = ss_tot <= 1e-300
    r2 = np.where(constant, 1.0, 1.0 - ss_res / np.where(constant, 1.0, ss_tot))
    return r2, int(np.count_nonzero(constant))


def vet_score(teacher, trials, seed, grid_points=None, r2_target=None):
    """
    Mean R² of linear fits to random axis slices through the teacher; lower is more nonlinear.
    Each trial fixes a random base point in [-1/2, 1/2)^k and sweeps every live axis over a grid.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    settings = _vetting_defaults()
    grid_points = int(grid_points or settings.get("grid_points", 64))
    r2_target = r2_target or settings.get("r2_target", "logit_diff")
    if r2_target not in R2_TARGETS:
        raise ValueError(f"unknown r2_target {r2_target!r}; expected one of {R2_TARGETS}")

    rng = make_rng(seed)
    live = teacher.live_features()
    grid = np.linspace(-0.5, 0.5, grid_points)
    scores = []
    constant = 0
    for _ in range(trials):
        base = teacher.sample_inputs(rng, 1)[0]
        batch = np.repeat(base[None, :], len(live) * grid_points, axis=0)
        for i, axis in enumerate(live):
            batch[i * grid_points:(i + 1) * grid_points, axis] = grid
        y = _scalar_output(teacher(batch), r2_target).reshape(len(live), grid_points)
        r2, flat = _slice_r2(grid, y)
        constant += flat
        scores.append(float(np.mean(r2)))

    if constant:
        logger.info("[Vet] %d constant slices scored as R²=1", constant)
    return VetResult(float(np.mean(scores)), constant)


def score_candidates(shape, k, candidates, trials, seed, workers=None):
    """[(candidate seed, VetResult)] in candidate order."""
    candidates = int(candidates)
    if candidates < 1:
        raise ValueError(f"candidates must be >= 1, got {candidates}")
    seeds = [derive_seed(seed, "candidate", i) for i in range(candidates)]
    trial_seed = derive_seed(seed, "slices")

    def score(candidate_seed):
        return vet_score(make_teacher(shape, k, candidate_seed), trials, trial_seed)

    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        results = list(pool.map(score, seeds))
    return list(zip(seeds, results))


def vet_teachers(shape, k, candidates=None, trials=None, seed=0, workers=None):
    """The minimum-score teacher among `candidates` random ones; ties go to the lowest seed."""
    settings = _vetting_defaults()
    candidates = int(candidates or settings.get("candidates", 500))
    trials = int(trials or settings.get("trials", 50))
    scored = score_candidates(shape, k, candidates, trials, seed, workers)
    best_seed, best = min(scored, key=lambda item: (item[1].score, item[0]))
    logger.info("[Vet] k=%d: best of %d candidates scored %.4f (seed %d)", k, candidates, best.score, best_seed)
    teacher = make_teacher(shape, k, best_seed)
    teacher.spec.vetting_score = best.score
    return teacher
