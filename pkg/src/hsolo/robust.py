"""Generic RANSAC engine for homographies.

The engine supports a sample pool distinct from the scoring pool: minimal
samples are drawn from ``sample_pool`` while support is always counted against
``score_pool``. With both pools equal this is the standard adaptive RANSAC.

Candidate models are evaluated in batches for speed, then replayed in
iteration order, so an improvement found at iteration i still tightens the
budget seen by iteration i + 1 exactly as in a one-at-a-time loop. All
randomness comes from a single generator seeded by the config, which makes
runs with the same inputs and seed reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateConfiguration, IllConditioned, NoModelFound, SingularMatrix
from .geometry import SINGULARITY_RTOL, Correspondence, Homography, pool_arrays, transfer_errors
from .solvers import COLLINEARITY_AREA_RTOL, dlt_solve

DEFAULT_MAX_ITERATIONS = 10_000_000

_CHUNK = 2048


def required_iterations(w: float, n: int, p: float, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> int:
    """Iterations needed to draw at least one all-inlier n-sample with probability p.

    ceil(log(1-p) / log(1 - w**n)), clamped to [1, max_iterations]. An inlier
    rate of 1 returns 1.
    """
    if not 0.0 < w <= 1.0:
        raise ValueError(f"inlier rate must be in (0, 1], got {w}")
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"success probability must be in (0, 1), got {p}")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    wn = w**n
    if wn >= 1.0:
        return 1
    denom = math.log1p(-wn)
    if denom == 0.0:  # w**n underflowed
        return max_iterations
    k = math.ceil(math.log1p(-p) / denom)
    return max(1, min(k, max_iterations))


@dataclass(frozen=True)
class RansacConfig:
    """Parameters of a RANSAC run."""

    epsilon: float = 4.0
    p: float = 0.95
    sample_size: int = 4
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {self.p}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.sample_size < 4:
            raise ValueError(f"sample_size must be >= 4, got {self.sample_size}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class Improvement:
    """Diagnostic record of one best-support update."""

    iteration: int  # 1-based iteration count at which the improvement landed
    support: int
    k_after: int
    model: Homography


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of a robust estimation run."""

    model: Homography
    inlier_indices: np.ndarray  # sorted indices into the scoring pool
    support: int
    iterations_run: int
    k_final: int
    elapsed: float
    history: tuple[Improvement, ...] = field(default=(), repr=False)


def _draw_distinct(rng: np.random.Generator, n: int, s: int, count: int) -> np.ndarray:
    """(count, s) samples of distinct indices in [0, n), uniform over subsets."""
    if n <= 64:
        keys = rng.random((count, n))
        return np.argpartition(keys, s - 1, axis=1)[:, :s]
    out = rng.integers(0, n, size=(count, s))
    while True:
        srt = np.sort(out, axis=1)
        bad = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
        n_bad = int(bad.sum())
        if n_bad == 0:
            return out
        out[bad] = rng.integers(0, n, size=(n_bad, s))


def _solve_minimal_batch(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized DLT on a batch of 4-point samples.

    src, dst: (c, 4, 2). Returns (models (c, 3, 3), valid (c,)). Invalid rows
    (collinear sources, coincident points, singular systems) carry garbage
    models and must be ignored by the caller.
    """
    count = src.shape[0]
    valid = np.ones(count, dtype=bool)

    spans = src.max(axis=1) - src.min(axis=1)
    bbox = spans[:, 0] * spans[:, 1]
    min_area = np.full(count, np.inf)
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        ax = src[:, j, 0] - src[:, i, 0]
        ay = src[:, j, 1] - src[:, i, 1]
        bx = src[:, k, 0] - src[:, i, 0]
        by = src[:, k, 1] - src[:, i, 1]
        min_area = np.minimum(min_area, 0.5 * np.abs(ax * by - ay * bx))
    valid &= min_area > COLLINEARITY_AREA_RTOL * bbox

    c1 = src.mean(axis=1, keepdims=True)
    d1 = src - c1
    rms1 = np.sqrt(np.mean(np.sum(d1**2, axis=2), axis=1))
    c2 = dst.mean(axis=1, keepdims=True)
    d2 = dst - c2
    rms2 = np.sqrt(np.mean(np.sum(d2**2, axis=2), axis=1))
    valid &= (rms1 > 0.0) & (rms2 > 0.0)
    s1 = math.sqrt(2.0) / np.where(rms1 > 0.0, rms1, 1.0)
    s2 = math.sqrt(2.0) / np.where(rms2 > 0.0, rms2, 1.0)

    un = d1 * s1[:, None, None]
    xn = d2 * s2[:, None, None]
    u, v = un[:, :, 0], un[:, :, 1]
    x, y = xn[:, :, 0], xn[:, :, 1]

    a = np.zeros((count, 8, 8))
    a[:, 0::2, 0] = u
    a[:, 0::2, 1] = v
    a[:, 0::2, 2] = 1.0
    a[:, 0::2, 6] = -u * x
    a[:, 0::2, 7] = -v * x
    a[:, 1::2, 3] = u
    a[:, 1::2, 4] = v
    a[:, 1::2, 5] = 1.0
    a[:, 1::2, 6] = -u * y
    a[:, 1::2, 7] = -v * y
    rhs = np.zeros((count, 8))
    rhs[:, 0::2] = x
    rhs[:, 1::2] = y

    a[~valid] = np.eye(8)
    try:
        h = np.linalg.solve(a, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # rare: an exactly singular system slipped past the area check
        h = np.zeros((count, 8))
        for idx in range(count):
            try:
                h[idx] = np.linalg.solve(a[idx], rhs[idx])
            except np.linalg.LinAlgError:
                valid[idx] = False
    finite = np.isfinite(h).all(axis=1)
    valid &= finite
    h[~finite] = 0.0

    h_n = np.empty((count, 3, 3))
    h_n[:, 0, :] = h[:, 0:3]
    h_n[:, 1, :] = h[:, 3:6]
    h_n[:, 2, 0] = h[:, 6]
    h_n[:, 2, 1] = h[:, 7]
    h_n[:, 2, 2] = 1.0

    t1 = np.zeros((count, 3, 3))
    t1[:, 0, 0] = s1
    t1[:, 1, 1] = s1
    t1[:, 0, 2] = -s1 * c1[:, 0, 0]
    t1[:, 1, 2] = -s1 * c1[:, 0, 1]
    t1[:, 2, 2] = 1.0
    t2_inv = np.zeros((count, 3, 3))
    t2_inv[:, 0, 0] = 1.0 / s2
    t2_inv[:, 1, 1] = 1.0 / s2
    t2_inv[:, 0, 2] = c2[:, 0, 0]
    t2_inv[:, 1, 2] = c2[:, 0, 1]
    t2_inv[:, 2, 2] = 1.0
    return t2_inv @ h_n @ t1, valid


def _support_counts(
    models: np.ndarray, valid: np.ndarray, src_h: np.ndarray, dst: np.ndarray, epsilon: float
) -> np.ndarray:
    """Inlier counts of each model over the scoring points."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        proj = models @ src_h.T  # (c, 3, n)
        fro = np.sqrt((models**2).sum(axis=(1, 2)))
        w = proj[:, 2, :]
        bad = ~(np.abs(w) > SINGULARITY_RTOL * fro[:, None])
        w_safe = np.where(bad, 1.0, w)
        dx = proj[:, 0, :] / w_safe - dst[:, 0]
        dy = proj[:, 1, :] / w_safe - dst[:, 1]
        e2 = dx * dx + dy * dy
        e2[bad] = np.inf
        counts = (e2 <= epsilon * epsilon).sum(axis=1)
    counts[~valid] = 0
    return counts.astype(np.int64)


def _models_for_samples(
    sample_pool: list[Correspondence],
    s_src: np.ndarray,
    s_dst: np.ndarray,
    samples: np.ndarray,
    sample_size: int,
) -> tuple[np.ndarray, np.ndarray]:
    if sample_size == 4:
        return _solve_minimal_batch(s_src[samples], s_dst[samples])
    count = samples.shape[0]
    models = np.zeros((count, 3, 3))
    valid = np.zeros(count, dtype=bool)
    for i in range(count):
        try:
            models[i] = dlt_solve([sample_pool[j] for j in samples[i]]).m
            valid[i] = True
        except (DegenerateConfiguration, IllConditioned, SingularMatrix):
            pass
    return models, valid


def ransac_homography(
    sample_pool: list[Correspondence],
    score_pool: list[Correspondence],
    w_init: float,
    config: RansacConfig,
) -> EstimationResult:
    """Adaptive RANSAC with separate sampling and scoring pools.

    Draws ``config.sample_size`` distinct correspondences per iteration from
    ``sample_pool`` (a degenerate sample consumes its iteration), solves the
    minimal DLT, and counts support in ``score_pool`` at threshold
    ``config.epsilon``. The iteration budget starts from ``w_init`` and is
    re-derived from support / len(sample_pool) after each improvement, never
    increasing. The best model is refit on all of its scoring-pool inliers
    before being returned.

    Raises :class:`NoModelFound` if no candidate reaches a support of 4.
    """
    t0 = time.perf_counter()
    ns = len(sample_pool)
    if ns < config.sample_size:
        raise ValueError(f"sample pool has {ns} < {config.sample_size} correspondences")
    if not 0.0 < w_init <= 1.0:
        raise ValueError(f"w_init must be in (0, 1], got {w_init}")

    s_src, s_dst = pool_arrays(sample_pool)
    f_src, f_dst = pool_arrays(score_pool)
    src_h = np.column_stack([f_src, np.ones(len(score_pool))])

    rng = np.random.default_rng(config.seed)
    k = required_iterations(w_init, config.sample_size, config.p, config.max_iterations)

    best_support = 0
    best_model: Homography | None = None
    history: list[Improvement] = []
    it = 0
    # start with small batches: an early improvement often collapses k, and
    # candidates drawn past the collapsed budget are wasted work
    batch = 256
    while it < k:
        chunk = min(batch, k - it)
        batch = min(2 * batch, _CHUNK)
        samples = _draw_distinct(rng, ns, config.sample_size, chunk)
        models, valid = _models_for_samples(sample_pool, s_src, s_dst, samples, config.sample_size)
        supports = _support_counts(models, valid, src_h, f_dst, config.epsilon)
        for j in range(chunk):
            if it >= k:
                break
            it += 1
            sup = int(supports[j])
            if sup >= 4 and sup > best_support:
                try:
                    model = Homography(models[j])
                except (SingularMatrix, ValueError):
                    continue
                best_support = sup
                best_model = model
                w_hat = min(1.0, sup / ns)
                k = min(
                    k,
                    required_iterations(w_hat, config.sample_size, config.p, config.max_iterations),
                )
                history.append(Improvement(it, sup, k, model))

    if best_model is None:
        raise NoModelFound("no sampled model reached a support of 4")

    model, inlier_idx = _consensus_refit(best_model, score_pool, f_src, f_dst, config.epsilon)
    return EstimationResult(
        model=model,
        inlier_indices=inlier_idx,
        support=int(inlier_idx.size),
        iterations_run=it,
        k_final=k,
        elapsed=time.perf_counter() - t0,
        history=tuple(history),
    )


def _consensus_refit(
    model: Homography,
    score_pool: list[Correspondence],
    f_src: np.ndarray,
    f_dst: np.ndarray,
    epsilon: float,
) -> tuple[Homography, np.ndarray]:
    """Refit on all scoring-pool inliers; keep the original if that degrades support."""
    errs = transfer_errors(model.m, f_src, f_dst)
    idx = np.flatnonzero(errs <= epsilon)
    if idx.size >= 4:
        try:
            refit = dlt_solve([score_pool[i] for i in idx])
        except (DegenerateConfiguration, IllConditioned, SingularMatrix):
            refit = None
        if refit is not None:
            errs2 = transfer_errors(refit.m, f_src, f_dst)
            idx2 = np.flatnonzero(errs2 <= epsilon)
            if idx2.size >= idx.size:
                return refit, idx2
    return model, idx
