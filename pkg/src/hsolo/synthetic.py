"""Ground-truth scene generation for benchmarking.

Builds candidate correspondence pools with a known homography and a prescribed
inlier rate. Inlier byproducts (feature scale and orientation) are derived
from the local linearization of the truth map, so a perfect detector is the
zero-noise limit; noise channels then model detector imprecision. Outliers are
uniformly random in both images with uninformative byproducts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateProjection, InfeasibleSpec
from .geometry import (
    SINGULARITY_RTOL,
    AffineFeature,
    Correspondence,
    Homography,
    Point2,
    normalize_angle,
    project,
)

_CENTRAL_FRACTION = 0.8


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one synthetic scene.

    ``image_bounds`` = (width, height) applies to both images. Pixel noise
    perturbs target points only; scale noise is multiplicative log-normal and
    angle noise additive Gaussian, both applied to the target feature's
    byproducts. ``outlier_scale_range`` bounds the log-uniform scale draw for
    outlier features.
    """

    truth: Homography
    image_bounds: tuple[float, float]
    n_total: int
    inlier_rate: float
    pixel_noise_sigma: float = 0.0
    scale_noise_sigma: float = 0.0
    angle_noise_sigma: float = 0.0
    outlier_scale_range: tuple[float, float] = (0.5, 2.0)
    seed: int = 0

    def __post_init__(self):
        w, h = self.image_bounds
        if w <= 0 or h <= 0:
            raise ValueError(f"image bounds must be positive, got {self.image_bounds}")
        if self.n_total < 8:
            raise ValueError(f"n_total must be >= 8, got {self.n_total}")
        if not 0.0 < self.inlier_rate <= 1.0:
            raise ValueError(f"inlier_rate must be in (0, 1], got {self.inlier_rate}")
        for name in ("pixel_noise_sigma", "scale_noise_sigma", "angle_noise_sigma"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        lo, hi = self.outlier_scale_range
        if not 0.0 < lo <= hi:
            raise ValueError(f"invalid outlier_scale_range {self.outlier_scale_range}")


@dataclass(frozen=True)
class LocalByproducts:
    """First-order behavior of a homography at a point.

    ``flipped`` marks an orientation-reversing Jacobian; ``scale_ratio`` is
    then the geometric mean of the singular values instead of sqrt(det).
    """

    scale_ratio: float
    angle_delta: float
    flipped: bool


def jacobian_byproducts(truth: Homography, p: Point2) -> LocalByproducts:
    """Scale ratio and rotation angle an ideal detector would report at p.

    Computes the analytic 2x2 Jacobian of the projective map at p; the angle
    comes from its orthogonal polar factor and the scale from its determinant.

    Raises :class:`DegenerateProjection` when p lies too close to the map's
    line at infinity.
    """
    m = truth.m
    x, y = p.u, p.v
    big_w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    fro = math.sqrt(float(np.sum(m**2)))
    if not abs(big_w) > SINGULARITY_RTOL * fro:
        raise DegenerateProjection(f"point {p} projects to infinity")
    xp = (m[0, 0] * x + m[0, 1] * y + m[0, 2]) / big_w
    yp = (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / big_w
    j11 = (m[0, 0] - xp * m[2, 0]) / big_w
    j12 = (m[0, 1] - xp * m[2, 1]) / big_w
    j21 = (m[1, 0] - yp * m[2, 0]) / big_w
    j22 = (m[1, 1] - yp * m[2, 1]) / big_w
    det = j11 * j22 - j12 * j21
    if det > 0.0:
        angle = math.atan2(j21 - j12, j11 + j22)
        return LocalByproducts(math.sqrt(det), normalize_angle(angle), False)
    jac = np.array([[j11, j12], [j21, j22]])
    u, s, vt = np.linalg.svd(jac)
    if s[0] <= 0.0:
        raise DegenerateProjection(f"vanishing Jacobian at {p}")
    q = u @ vt
    angle = math.atan2(q[1, 0], q[0, 0])
    return LocalByproducts(math.sqrt(s[0] * s[1]), normalize_angle(angle), True)


def _sample_inlier_sources(spec: SceneSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """Source points from the central region whose projections stay in bounds."""
    width, height = spec.image_bounds
    margin = (1.0 - _CENTRAL_FRACTION) / 2.0
    m = spec.truth.m
    fro = math.sqrt(float(np.sum(m**2)))
    accepted: list[np.ndarray] = []
    n_acc = 0
    attempts = 0
    rejects = 0
    min_probe = max(2 * count, 64)
    while n_acc < count:
        draw = max(count - n_acc, 32)
        xs = rng.uniform(margin * width, (1.0 - margin) * width, size=draw)
        ys = rng.uniform(margin * height, (1.0 - margin) * height, size=draw)
        big_w = m[2, 0] * xs + m[2, 1] * ys + m[2, 2]
        safe = np.abs(big_w) > SINGULARITY_RTOL * fro
        big_w_safe = np.where(safe, big_w, 1.0)
        px = (m[0, 0] * xs + m[0, 1] * ys + m[0, 2]) / big_w_safe
        py = (m[1, 0] * xs + m[1, 1] * ys + m[1, 2]) / big_w_safe
        ok = safe & (px >= 0.0) & (px <= width) & (py >= 0.0) & (py <= height)
        attempts += draw
        rejects += int(draw - ok.sum())
        if ok.any():
            pts = np.column_stack([xs[ok], ys[ok]])
            accepted.append(pts)
            n_acc += pts.shape[0]
        if n_acc < count and attempts >= min_probe and rejects > 0.5 * attempts:
            raise InfeasibleSpec(
                f"truth maps the central source region out of bounds for "
                f"{rejects}/{attempts} attempts"
            )
    return np.concatenate(accepted, axis=0)[:count]


def generate_scene(spec: SceneSpec) -> tuple[list[Correspondence], np.ndarray]:
    """Generate a shuffled correspondence pool and its true-inlier mask.

    Exactly round(n_total * inlier_rate) inliers: sources uniform in the
    central 80% of image 1 (rejected if the truth projects them out of image
    2), targets are the exact projections plus optional Gaussian pixel noise,
    and byproducts follow :func:`jacobian_byproducts` with optional noise.
    Outliers are uniform in both images with log-uniform scales and uniform
    angles. Output order is shuffled; the boolean mask marks true inliers.

    Raises :class:`InfeasibleSpec` when more than half of the source draws
    project out of bounds.
    """
    rng = np.random.default_rng(spec.seed)
    width, height = spec.image_bounds
    n_in = round(spec.n_total * spec.inlier_rate)
    n_out = spec.n_total - n_in

    correspondences: list[Correspondence] = []
    if n_in > 0:
        sources = _sample_inlier_sources(spec, rng, n_in)
        log_lo, log_hi = math.log(0.5), math.log(2.0)
        for sx, sy in sources:
            a_p = Point2(float(sx), float(sy))
            b_p = project(spec.truth, a_p)
            if spec.pixel_noise_sigma > 0.0:
                b_p = Point2(
                    b_p.u + rng.normal(0.0, spec.pixel_noise_sigma),
                    b_p.v + rng.normal(0.0, spec.pixel_noise_sigma),
                )
            local = jacobian_byproducts(spec.truth, a_p)
            s1 = math.exp(rng.uniform(log_lo, log_hi))
            theta1 = rng.uniform(-math.pi, math.pi)
            s2 = s1 * local.scale_ratio
            if spec.scale_noise_sigma > 0.0:
                s2 *= math.exp(rng.normal(0.0, spec.scale_noise_sigma))
            theta2 = theta1 + local.angle_delta
            if spec.angle_noise_sigma > 0.0:
                theta2 += rng.normal(0.0, spec.angle_noise_sigma)
            correspondences.append(
                Correspondence(
                    AffineFeature(a_p, s1, theta1),
                    AffineFeature(b_p, s2, theta2),
                )
            )

    log_lo, log_hi = math.log(spec.outlier_scale_range[0]), math.log(spec.outlier_scale_range[1])
    for _ in range(n_out):
        a_p = Point2(rng.uniform(0.0, width), rng.uniform(0.0, height))
        b_p = Point2(rng.uniform(0.0, width), rng.uniform(0.0, height))
        s1 = math.exp(rng.uniform(log_lo, log_hi))
        s2 = math.exp(rng.uniform(log_lo, log_hi))
        theta1 = rng.uniform(-math.pi, math.pi)
        theta2 = rng.uniform(-math.pi, math.pi)
        correspondences.append(
            Correspondence(AffineFeature(a_p, s1, theta1), AffineFeature(b_p, s2, theta2))
        )

    mask = np.zeros(spec.n_total, dtype=bool)
    mask[:n_in] = True
    perm = rng.permutation(spec.n_total)
    shuffled = [correspondences[i] for i in perm]
    return shuffled, mask[perm]


def random_scene_truth(rng: np.random.Generator, image_bounds: tuple[float, float]) -> Homography:
    """A moderate random projective map keeping the central region in frame.

    Convenience for benchmark sweeps: mild scale/rotation/shear around the
    image center, small translation jitter, and weak perspective terms, chosen
    so generate_scene's rejection sampling stays well below its feasibility
    limit.
    """
    width, height = image_bounds
    scale = rng.uniform(0.85, 1.15)
    angle = rng.uniform(-math.pi / 12.0, math.pi / 12.0)
    c, s = math.cos(angle), math.sin(angle)
    lin = scale * np.array([[c, -s], [s, c]]) + rng.uniform(-0.03, 0.03, size=(2, 2))
    persp = rng.uniform(-0.1, 0.1, size=2) / max(width, height)
    center = np.array([width / 2.0, height / 2.0])
    target = center + rng.uniform(-0.03, 0.03, size=2) * np.array([width, height])
    # pick the translation so the image center lands on the jittered target
    denom = persp @ center + 1.0
    t = target * denom - lin @ center
    m = np.array(
        [
            [lin[0, 0], lin[0, 1], t[0]],
            [lin[1, 0], lin[1, 1], t[1]],
            [persp[0], persp[1], 1.0],
        ]
    )
    return Homography(m)
