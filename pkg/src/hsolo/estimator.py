"""Homography estimation seeded from single feature correspondences.

One scale/rotation-aware correspondence pins down a similarity approximation
of the homography. Ranking the pool by reprojection error under that
approximation concentrates inliers near the top, so a small inner RANSAC on
the best-ranked subset can recover the full model in a handful of draws. The
outer loop tries seed correspondences one at a time from a shuffled pool, uses
the median filtered error as a cheap gate to skip hopeless seeds, and adapts
its iteration budget as support improves. The winning model is polished by a
damped Gauss-Newton (Levenberg-Marquardt) pass over its inliers.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientData, NoModelFound, SingularMatrix
from .geometry import SINGULARITY_RTOL, Correspondence, Homography, pool_arrays, transfer_errors
from .robust import (
    DEFAULT_MAX_ITERATIONS,
    EstimationResult,
    Improvement,
    RansacConfig,
    ransac_homography,
    required_iterations,
)
from .solvers import single_match_homography


@dataclass(frozen=True)
class HsoloConfig:
    """Parameters of the single-correspondence estimation loop.

    ``inlier_scaling`` discounts the observed inlier rate when recomputing the
    outer iteration budget, compensating for seeds whose scale/rotation
    byproducts are too noisy to pass the gate even though the match itself is
    an inlier.
    """

    epsilon: float = 4.0
    p: float = 0.95
    w_f: float = 0.7
    n_f: int = 21
    epsilon_r: float = 20.0
    inlier_scaling: float = 0.7
    max_outer_iterations: int = DEFAULT_MAX_ITERATIONS
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {self.p}")
        if not 0.0 < self.w_f < 1.0:
            raise ValueError(f"w_f must be in (0, 1), got {self.w_f}")
        if self.n_f < 5:
            raise ValueError(f"n_f must be >= 5, got {self.n_f}")
        if self.epsilon_r <= 0.0:
            raise ValueError(f"epsilon_r must be > 0, got {self.epsilon_r}")
        if not 0.0 < self.inlier_scaling <= 1.0:
            raise ValueError(f"inlier_scaling must be in (0, 1], got {self.inlier_scaling}")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class FilteredSet:
    """The pool entries ranked best by a candidate model.

    ``indices`` point into the pool the filter ran on; ``errors`` are their
    reprojection errors in ascending order (ties broken by index).
    """

    indices: np.ndarray
    errors: np.ndarray
    median_error: float


def _filtered_from_errors(errors: np.ndarray, n_f: int) -> FilteredSet:
    take = min(n_f, errors.shape[0])
    pairs = heapq.nsmallest(take, zip(errors.tolist(), range(errors.shape[0])))
    idx = np.fromiter((i for _, i in pairs), dtype=np.intp, count=take)
    errs = np.fromiter((e for e, _ in pairs), dtype=np.float64, count=take)
    return FilteredSet(indices=idx, errors=errs, median_error=float(np.median(errs)))


def filter_by_model(h_prime: Homography, pool: list[Correspondence], n_f: int) -> FilteredSet:
    """Select the min(n_f, len(pool)) correspondences with lowest error under h_prime.

    Selection is exact: ties in error are broken by pool index, and
    correspondences whose source projects to infinity rank last (+inf error).
    Uses a bounded heap, so cost is O(n log n_f) comparisons.
    """
    if not pool:
        raise ValueError("pool must be non-empty")
    if n_f < 1:
        raise ValueError(f"n_f must be >= 1, got {n_f}")
    src, dst = pool_arrays(pool)
    return _filtered_from_errors(transfer_errors(h_prime.m, src, dst), n_f)


def median_gate(fs: FilteredSet, epsilon_r: float) -> bool:
    """True when the filtered set's median error is within epsilon_r."""
    return bool(fs.median_error <= epsilon_r)


def estimate_epsilon_r(errors) -> float:
    """Upper-fence outlier bound Q3 + 3*(Q3 - Q1) of an error sample.

    Quartiles use linear interpolation. Intended for calibrating the gate
    threshold on data where the default does not fit.
    """
    arr = np.asarray(errors, dtype=np.float64).ravel()
    if arr.size < 4:
        raise InsufficientData(f"need >= 4 error samples, got {arr.size}")
    q1, q3 = np.percentile(arr, [25.0, 75.0])
    return float(q3 + 3.0 * (q3 - q1))


@dataclass(frozen=True)
class Refinement:
    """Outcome of nonlinear model refinement.

    ``degraded`` is True when refinement could not run (numerically unusable
    starting point); the model is then the unchanged input.
    """

    model: Homography
    initial_cost: float
    final_cost: float
    iterations: int
    degraded: bool


def _residuals_and_jacobian(params: np.ndarray, src: np.ndarray, dst: np.ndarray):
    """Stacked reprojection residuals and their Jacobian for 8-parameter models.

    ``params`` are the first 8 row-major homography entries with the ninth
    fixed at 1. Rows interleave x and y residuals per point. Division by a
    vanishing denominator is left to produce non-finite values the caller must
    reject.
    """
    u, v = src[:, 0], src[:, 1]
    big_x = params[0] * u + params[1] * v + params[2]
    big_y = params[3] * u + params[4] * v + params[5]
    big_w = params[6] * u + params[7] * v + 1.0
    iw = 1.0 / big_w
    x = big_x * iw
    y = big_y * iw
    m = src.shape[0]
    r = np.empty(2 * m)
    r[0::2] = x - dst[:, 0]
    r[1::2] = y - dst[:, 1]
    jac = np.zeros((2 * m, 8))
    jac[0::2, 0] = u * iw
    jac[0::2, 1] = v * iw
    jac[0::2, 2] = iw
    jac[0::2, 6] = -x * u * iw
    jac[0::2, 7] = -x * v * iw
    jac[1::2, 3] = u * iw
    jac[1::2, 4] = v * iw
    jac[1::2, 5] = iw
    jac[1::2, 6] = -y * u * iw
    jac[1::2, 7] = -y * v * iw
    return r, jac


def refine_model(h: Homography, inliers: list[Correspondence]) -> Refinement:
    """Minimize the sum of squared reprojection errors over the inlier set.

    Levenberg-Marquardt on the 8 free entries (bottom-right fixed at 1):
    damping starts at 1e-3, shrinks tenfold on accepted steps and grows
    tenfold on rejected ones. Stops on relative cost decrease below 1e-10,
    step norm below 1e-12, or 100 attempted steps. The returned cost never
    exceeds the initial cost; if the starting point is numerically unusable
    the input is returned unchanged with ``degraded`` set.
    """
    if len(inliers) < 4:
        raise ValueError(f"need >= 4 inliers, got {len(inliers)}")
    src, dst = pool_arrays(inliers)
    m = h.m
    initial_errs = transfer_errors(m, src, dst)
    initial_cost = float(np.sum(initial_errs**2))

    # the 8-parameter chart needs a usable bottom-right entry
    if not abs(m[2, 2]) > SINGULARITY_RTOL * math.sqrt(float(np.sum(m**2))):
        return Refinement(h, initial_cost, initial_cost, 0, degraded=True)
    params = (m / m[2, 2]).ravel()[:8].copy()

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r, jac = _residuals_and_jacobian(params, src, dst)
    if not (np.isfinite(r).all() and np.isfinite(jac).all()):
        return Refinement(h, initial_cost, initial_cost, 0, degraded=True)

    cost = float(r @ r)
    start_cost = cost
    best_params = params
    best_cost = cost
    lam = 1e-3
    eye = np.eye(8)
    attempts = 0
    for _ in range(100):
        attempts += 1
        grad = jac.T @ r
        normal = jac.T @ jac
        try:
            delta = np.linalg.solve(normal + lam * eye, -grad)
        except np.linalg.LinAlgError:
            if best_cost < start_cost:
                break
            return Refinement(h, initial_cost, initial_cost, attempts, degraded=True)
        step = float(np.linalg.norm(delta))
        candidate = params + delta
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r2, jac2 = _residuals_and_jacobian(candidate, src, dst)
        ok = np.isfinite(r2).all() and np.isfinite(jac2).all()
        cand_cost = float(r2 @ r2) if ok else math.inf
        if cand_cost < cost:
            rel_drop = (cost - cand_cost) / cost if cost > 0.0 else 0.0
            params, r, jac, cost = candidate, r2, jac2, cand_cost
            lam = max(lam * 0.1, 1e-15)
            if cost < best_cost:
                best_params, best_cost = params, cost
            if rel_drop < 1e-10 or step < 1e-12:
                break
        else:
            lam *= 10.0
            if step < 1e-12 or lam > 1e15:
                break

    if best_cost >= start_cost:
        return Refinement(h, initial_cost, initial_cost, attempts, degraded=False)
    mat = np.empty((3, 3))
    mat.flat[:8] = best_params
    mat[2, 2] = 1.0
    try:
        refined = Homography(mat)
    except (SingularMatrix, ValueError):
        return Refinement(h, initial_cost, initial_cost, attempts, degraded=True)
    # initial_cost is measured on h as given; start_cost on the h9=1 chart.
    # They differ only by canonicalization rounding.
    return Refinement(refined, initial_cost, best_cost, attempts, degraded=False)


def hsolo_estimate(pool: list[Correspondence], config: HsoloConfig) -> EstimationResult:
    """Estimate a homography from a correspondence pool with byproducts.

    Shuffles the pool once, then per outer iteration: build the similarity
    approximation from the next correspondence, rank the pool by its error,
    and if the median of the best n_f is within epsilon_r run an inner RANSAC
    that samples from those n_f but scores on the whole pool. The outer budget
    starts from an assumed inlier rate of 1/len(pool) and is re-derived (for
    single-draw samples, with ``inlier_scaling`` applied) whenever the best
    support improves; the loop also never exceeds len(pool) seeds. The best
    model is refined before being returned. Reported inlier indices refer to
    the pool order given by the caller.

    Raises :class:`NoModelFound` when no seed passes the gate or no inner
    RANSAC reaches a support of 4.
    """
    t0 = time.perf_counter()
    n = len(pool)
    if n < 5:
        raise ValueError(f"pool must hold >= 5 correspondences, got {n}")

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    shuffled = [pool[i] for i in perm]
    src, dst = pool_arrays(shuffled)

    def outer_budget(w: float) -> int:
        scaled = min(1.0, w * config.inlier_scaling)
        return required_iterations(scaled, 1, config.p, config.max_outer_iterations)

    k = outer_budget(1.0 / n)
    best: EstimationResult | None = None
    best_support = 0
    history: list[Improvement] = []
    it = 0
    while it < min(k, n):
        seed_corr = shuffled[it]
        inner_seed = int(rng.integers(0, 2**63))
        it += 1
        h_prime = single_match_homography(seed_corr)
        fs = _filtered_from_errors(transfer_errors(h_prime.m, src, dst), config.n_f)
        if not median_gate(fs, config.epsilon_r):
            continue
        inner_config = RansacConfig(
            epsilon=config.epsilon, p=config.p, sample_size=4, seed=inner_seed
        )
        try:
            inner = ransac_homography(
                [shuffled[j] for j in fs.indices], shuffled, config.w_f, inner_config
            )
        except NoModelFound:
            continue
        if inner.support > best_support:
            best = inner
            best_support = inner.support
            k = min(k, outer_budget(min(1.0, inner.support / n)))
            history.append(Improvement(it, inner.support, k, inner.model))

    if best is None:
        raise NoModelFound("no seed correspondence led to a model with support >= 4")

    model = best.model
    inlier_idx = best.inlier_indices
    refinement = refine_model(model, [shuffled[j] for j in inlier_idx])
    if not refinement.degraded:
        errs = transfer_errors(refinement.model.m, src, dst)
        refined_idx = np.flatnonzero(errs <= config.epsilon)
        if refined_idx.size >= 4:
            model = refinement.model
            inlier_idx = refined_idx

    caller_idx = np.sort(perm[inlier_idx])
    return EstimationResult(
        model=model,
        inlier_indices=caller_idx,
        support=int(inlier_idx.size),
        iterations_run=it,
        k_final=k,
        elapsed=time.perf_counter() - t0,
        history=tuple(history),
    )
