"""Shared helpers for building exact correspondence pools with known truth."""

import math

import numpy as np
import pytest

from hsolo import AffineFeature, Correspondence, Homography, Point2, project
from hsolo.synthetic import jacobian_byproducts


def make_point_correspondence(truth: Homography, p: Point2) -> Correspondence:
    """Exact correspondence of ``truth`` with placeholder byproducts."""
    return Correspondence(
        AffineFeature(p, 1.0, 0.0),
        AffineFeature(project(truth, p), 1.0, 0.0),
    )


def make_byproduct_correspondence(
    truth: Homography, p: Point2, rng: np.random.Generator
) -> Correspondence:
    """Exact correspondence whose byproducts match the local behavior of truth."""
    local = jacobian_byproducts(truth, p)
    s1 = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
    theta1 = rng.uniform(-math.pi, math.pi)
    return Correspondence(
        AffineFeature(p, s1, theta1),
        AffineFeature(project(truth, p), s1 * local.scale_ratio, theta1 + local.angle_delta),
    )


def exact_pool(truth: Homography, points) -> list:
    return [make_point_correspondence(truth, p) for p in points]


def random_points(rng: np.random.Generator, n: int, width=640.0, height=480.0):
    return [
        Point2(rng.uniform(0.05 * width, 0.95 * width), rng.uniform(0.05 * height, 0.95 * height))
        for _ in range(n)
    ]


def random_truth(rng: np.random.Generator) -> Homography:
    """A well-conditioned random projective map at desk image scale."""
    scale = rng.uniform(0.8, 1.25)
    angle = rng.uniform(-0.4, 0.4)
    c, s = math.cos(angle), math.sin(angle)
    m = np.array(
        [
            [scale * c, -scale * s, rng.uniform(-40.0, 40.0)],
            [scale * s, scale * c, rng.uniform(-40.0, 40.0)],
            [rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4), 1.0],
        ]
    )
    m[0, 1] += rng.uniform(-0.05, 0.05)
    m[1, 0] += rng.uniform(-0.05, 0.05)
    return Homography(m)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
