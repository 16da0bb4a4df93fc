"""Monte-Carlo benchmark harness comparing estimation methods.

Runs repeated trials on synthetic scenes (fresh truth + pool per trial) or on
a correspondence file (fixed pool, varying estimator seeds). Success on
synthetic scenes is judged against held-out exact correspondences of the known
truth; files with a ground-truth column are judged on the flagged rows; files
without one fall back to clustering the per-trial mean errors, where the dense
low-error cluster is presumed correct.

Every trial derives its own seed from the base seed and trial index, so runs
are reproducible and trials can execute on a worker pool without changing any
result.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analysis import NOISE, dbscan_1d
from .estimator import HsoloConfig, hsolo_estimate
from .exceptions import InfeasibleSpec, NoModelFound
from .fileio import LoadedCorrespondences
from .geometry import pool_arrays, transfer_errors
from .robust import EstimationResult, RansacConfig, ransac_homography
from .synthetic import SceneSpec, generate_scene, random_scene_truth

SUCCESS_ERROR_PX = 2.0
METHODS = ("hsolo", "ransac")

_EVAL_GRID = 5


@dataclass(frozen=True)
class TrialRecord:
    """One estimation attempt and its evaluation."""

    method: str
    w_true: float
    success: bool
    mean_reproj_error: float
    iterations: int
    elapsed: float
    seed: int


@dataclass(frozen=True)
class SceneSweep:
    """Synthetic benchmark input: one scene family per inlier rate."""

    image_bounds: tuple[float, float]
    n_total: int
    inlier_rates: tuple[float, ...]
    pixel_noise_sigma: float = 0.0
    scale_noise_sigma: float = 0.0
    angle_noise_sigma: float = 0.0


@dataclass(frozen=True)
class SummaryRow:
    """Aggregate over the executed trials of one (method, inlier rate) cell."""

    method: str
    w_target: float
    trials: int
    skipped: int
    successes: int
    success_rate: float
    median_iterations: float
    median_error: float
    median_elapsed: float


@dataclass(frozen=True)
class BenchmarkResult:
    records: tuple[TrialRecord, ...]
    summary: tuple[SummaryRow, ...]
    notes: tuple[str, ...]


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint64)[0])


def _held_out_pairs(truth, bounds) -> tuple[np.ndarray, np.ndarray]:
    """Exact grid correspondences of the truth, never shown to the estimators."""
    width, height = bounds
    xs = np.linspace(0.1 * width, 0.9 * width, _EVAL_GRID)
    ys = np.linspace(0.1 * height, 0.9 * height, _EVAL_GRID)
    gx, gy = np.meshgrid(xs, ys)
    a = np.column_stack([gx.ravel(), gy.ravel()])
    m = truth.m
    w = m[2, 0] * a[:, 0] + m[2, 1] * a[:, 1] + m[2, 2]
    b = np.column_stack(
        [
            (m[0, 0] * a[:, 0] + m[0, 1] * a[:, 1] + m[0, 2]) / w,
            (m[1, 0] * a[:, 0] + m[1, 1] * a[:, 1] + m[1, 2]) / w,
        ]
    )
    return a, b


def _estimate(method, pool, h_cfg: HsoloConfig, r_cfg: RansacConfig):
    """Run one method; returns (result or None, elapsed seconds)."""
    t0 = time.perf_counter()
    try:
        if method == "hsolo":
            result: EstimationResult | None = hsolo_estimate(pool, h_cfg)
        else:
            w_floor = min(1.0, r_cfg.sample_size / len(pool))
            result = ransac_homography(pool, pool, w_floor, r_cfg)
    except NoModelFound:
        result = None
    return result, time.perf_counter() - t0


def _evaluate(result, elapsed, method, w_true, eval_a, eval_b, seed) -> TrialRecord:
    if result is None:
        return TrialRecord(method, w_true, False, math.inf, 0, elapsed, seed)
    with np.errstate(over="ignore", invalid="ignore"):
        mean_err = float(np.mean(transfer_errors(result.model.m, eval_a, eval_b)))
    if math.isnan(mean_err):
        mean_err = math.inf
    return TrialRecord(
        method,
        w_true,
        bool(mean_err < SUCCESS_ERROR_PX),
        mean_err,
        result.iterations_run,
        result.elapsed,
        seed,
    )


def _synthetic_trial(sweep, w, wi, ti, base_seed, methods, h_cfg, r_cfg) -> list[TrialRecord]:
    ss = np.random.SeedSequence((base_seed, wi, ti))
    trial_seed = _seed_int(ss)
    truth_ss, scene_ss, hsolo_ss, ransac_ss = ss.spawn(4)
    truth = random_scene_truth(np.random.default_rng(truth_ss), sweep.image_bounds)
    spec = SceneSpec(
        truth=truth,
        image_bounds=sweep.image_bounds,
        n_total=sweep.n_total,
        inlier_rate=w,
        pixel_noise_sigma=sweep.pixel_noise_sigma,
        scale_noise_sigma=sweep.scale_noise_sigma,
        angle_noise_sigma=sweep.angle_noise_sigma,
        seed=_seed_int(scene_ss),
    )
    try:
        pool, mask = generate_scene(spec)
    except InfeasibleSpec:
        return [TrialRecord(m, float("nan"), False, math.inf, 0, 0.0, trial_seed) for m in methods]
    w_true = float(mask.mean())
    eval_a, eval_b = _held_out_pairs(truth, sweep.image_bounds)
    records = []
    for method in methods:
        if method == "hsolo":
            cfg = replace(h_cfg, seed=_seed_int(hsolo_ss))
            result, elapsed = _estimate(method, pool, cfg, r_cfg)
        else:
            cfg = replace(r_cfg, seed=_seed_int(ransac_ss))
            result, elapsed = _estimate(method, pool, h_cfg, cfg)
        records.append(_evaluate(result, elapsed, method, w_true, eval_a, eval_b, trial_seed))
    return records


def _file_trial(loaded, eval_a, eval_b, w_true, ti, base_seed, methods, h_cfg, r_cfg):
    ss = np.random.SeedSequence((base_seed, 0, ti))
    trial_seed = _seed_int(ss)
    _, _, hsolo_ss, ransac_ss = ss.spawn(4)
    records = []
    for method in methods:
        if method == "hsolo":
            cfg = replace(h_cfg, seed=_seed_int(hsolo_ss))
            result, elapsed = _estimate(method, loaded.correspondences, cfg, r_cfg)
        else:
            cfg = replace(r_cfg, seed=_seed_int(ransac_ss))
            result, elapsed = _estimate(method, loaded.correspondences, h_cfg, cfg)
        records.append(_evaluate(result, elapsed, method, w_true, eval_a, eval_b, trial_seed))
    return records


def _run_trials(trial_fn, args_list, workers: int):
    if workers <= 1:
        batches = [trial_fn(*args) for args in args_list]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda a: trial_fn(*a), args_list))
    return [rec for batch in batches for rec in batch]


def _summarize(method, w_target, records, trials, skipped) -> SummaryRow:
    executed = len(records)
    successes = sum(1 for r in records if r.success)
    success_errors = [r.mean_reproj_error for r in records if r.success]
    return SummaryRow(
        method=method,
        w_target=w_target,
        trials=trials,
        skipped=skipped,
        successes=successes,
        success_rate=successes / executed if executed else math.nan,
        median_iterations=float(np.median([r.iterations for r in records])) if executed else math.nan,
        median_error=float(np.median(success_errors)) if success_errors else math.nan,
        median_elapsed=float(np.median([r.elapsed for r in records])) if executed else math.nan,
    )


def _cluster_success(records, methods, eps, min_pts):
    """Re-judge success by clustering mean errors (file input without truth)."""
    out = list(records)
    for method in methods:
        idx = [i for i, r in enumerate(records) if r.method == method]
        finite = [i for i in idx if math.isfinite(records[i].mean_reproj_error)]
        for i in idx:
            out[i] = replace(records[i], success=False)
        if not finite:
            continue
        pts = min_pts if min_pts is not None else max(5, math.ceil(0.02 * len(idx)))
        cr = dbscan_1d([records[i].mean_reproj_error for i in finite], eps, pts)
        if cr.largest_cluster_size == 0:
            continue
        sizes: dict[int, list[float]] = {}
        for label, i in zip(cr.labels, finite):
            if label != NOISE:
                sizes.setdefault(int(label), []).append(records[i].mean_reproj_error)
        winner = min(sizes, key=lambda c: (-len(sizes[c]), float(np.mean(sizes[c]))))
        for label, i in zip(cr.labels, finite):
            if label == winner:
                out[i] = replace(out[i], success=True)
    return out


def run_benchmark(
    source,
    methods,
    trials: int,
    hsolo_config: HsoloConfig,
    ransac_config: RansacConfig,
    *,
    seed: int = 0,
    workers: int = 1,
    dbscan_eps: float = 0.5,
    dbscan_min_pts: int | None = None,
) -> BenchmarkResult:
    """Run the benchmark on a :class:`SceneSweep` or :class:`LoadedCorrespondences`.

    The single-correspondence method is skipped (with a note) at inlier rates
    where the expected true-inlier count c fails c / n_f >= w_f, since its
    filtered-set assumption cannot hold there. Point-only files can only run
    the plain RANSAC baseline: the file must carry scale/angle byproduct
    columns for the seeded method.
    """
    methods = list(methods)
    if not methods:
        raise ValueError("need at least one method")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}, expected one of {METHODS}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    if isinstance(source, SceneSweep):
        return _run_synthetic(source, methods, trials, hsolo_config, ransac_config, seed, workers)
    if isinstance(source, LoadedCorrespondences):
        return _run_file(
            source,
            methods,
            trials,
            hsolo_config,
            ransac_config,
            seed,
            workers,
            dbscan_eps,
            dbscan_min_pts,
        )
    raise TypeError(f"source must be SceneSweep or LoadedCorrespondences, got {type(source)}")


def _hsolo_feasible(c: int, cfg: HsoloConfig) -> bool:
    return c / cfg.n_f >= cfg.w_f


def _run_synthetic(sweep, methods, trials, h_cfg, r_cfg, seed, workers) -> BenchmarkResult:
    records: list[TrialRecord] = []
    summary: list[SummaryRow] = []
    notes: list[str] = []
    for wi, w in enumerate(sweep.inlier_rates):
        run_methods = list(methods)
        skipped = 0
        c = round(sweep.n_total * w)
        if "hsolo" in run_methods and not _hsolo_feasible(c, h_cfg):
            run_methods.remove("hsolo")
            skipped = trials
            notes.append(
                f"hsolo skipped at w={w}: expected inliers {c} give "
                f"c/n_f = {c / h_cfg.n_f:.3f} < w_f = {h_cfg.w_f}"
            )
        args = [(sweep, w, wi, ti, seed, run_methods, h_cfg, r_cfg) for ti in range(trials)]
        batch = _run_trials(_synthetic_trial, args, workers) if run_methods else []
        records.extend(batch)
        for method in methods:
            group = [r for r in batch if r.method == method]
            n_skipped = skipped if method == "hsolo" else 0
            summary.append(_summarize(method, w, group, trials, n_skipped))
    return BenchmarkResult(tuple(records), tuple(summary), tuple(notes))


def _run_file(
    loaded, methods, trials, h_cfg, r_cfg, seed, workers, dbscan_eps, dbscan_min_pts
) -> BenchmarkResult:
    notes: list[str] = []
    if "hsolo" in methods and not loaded.has_byproducts:
        raise ValueError(
            "the input file has point-only correspondences; the hsolo method needs "
            "the scale/angle byproduct columns (8-field rows). Run with ransac only."
        )
    mask = loaded.inlier_mask
    run_methods = list(methods)
    skipped = 0
    if mask is not None:
        c = int(mask.sum())
        w_true = float(mask.mean())
        if "hsolo" in run_methods and not _hsolo_feasible(c, h_cfg):
            run_methods.remove("hsolo")
            skipped = trials
            notes.append(
                f"hsolo skipped: {c} flagged inliers give "
                f"c/n_f = {c / h_cfg.n_f:.3f} < w_f = {h_cfg.w_f}"
            )
        eval_pool = [loaded.correspondences[i] for i in np.flatnonzero(mask)]
    else:
        w_true = float("nan")
        eval_pool = loaded.correspondences
        notes.append("no ground-truth column: success judged by clustering mean errors")
    eval_a, eval_b = pool_arrays(eval_pool)

    args = [
        (loaded, eval_a, eval_b, w_true, ti, seed, run_methods, h_cfg, r_cfg)
        for ti in range(trials)
    ]
    records = _run_trials(_file_trial, args, workers) if run_methods else []
    if mask is None and records:
        records = _cluster_success(records, run_methods, dbscan_eps, dbscan_min_pts)
    summary = [
        _summarize(
            m,
            w_true,
            [r for r in records if r.method == m],
            trials,
            skipped if m == "hsolo" else 0,
        )
        for m in methods
    ]
    return BenchmarkResult(tuple(records), tuple(summary), tuple(notes))


def format_records(records, include_timing: bool = False) -> str:
    """Tab-separated trial table; timing column is 0 unless requested."""
    lines = ["method\tw_true\tsuccess\tmean_reproj_error\titerations\telapsed_s\tseed"]
    for r in records:
        elapsed = f"{r.elapsed:.6f}" if include_timing else "0"
        lines.append(
            f"{r.method}\t{r.w_true!r}\t{int(r.success)}\t{r.mean_reproj_error!r}"
            f"\t{r.iterations}\t{elapsed}\t{r.seed}"
        )
    return "\n".join(lines) + "\n"


def format_summary(result: BenchmarkResult, include_timing: bool = False) -> str:
    """Tab-separated per-(method, w) aggregates, with notes as # lines."""
    lines = [
        "method\tw\ttrials\tskipped\tsuccesses\tsuccess_rate"
        "\tmedian_iterations\tmedian_error\tmedian_elapsed_s"
    ]
    for row in result.summary:
        elapsed = f"{row.median_elapsed:.6f}" if include_timing else "0"
        lines.append(
            f"{row.method}\t{row.w_target!r}\t{row.trials}\t{row.skipped}\t{row.successes}"
            f"\t{row.success_rate!r}\t{row.median_iterations!r}\t{row.median_error!r}\t{elapsed}"
        )
    for note in result.notes:
        lines.append(f"# {note}")
    return "\n".join(lines) + "\n"
