"""Homography solvers.

Two entry points: the Hartley-normalized least-squares DLT for four or more
correspondences, and the closed-form similarity built from a single
correspondence's scale and rotation byproducts.

The single-match solver treats each feature's byproducts as a canonical-patch
to image map (scale, then rotate, then translate onto the feature point). The
similarity between the two images is then patch-map(b) composed with the
inverse patch-map(a); by construction it sends the first feature point exactly
onto the second and its linear part is (s_b/s_a) times the rotation by
(angle_b - angle_a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateConfiguration, IllConditioned, InvalidFeature
from .geometry import Correspondence, Homography

# A minimal-sample source triple whose triangle area is below this fraction of
# the sample's bounding-box area counts as collinear.
COLLINEARITY_AREA_RTOL = 1e-6

# Reject DLT systems whose design-matrix condition number (after Hartley
# normalization) squares past double precision; equivalent to a normal-equation
# condition estimate above ~1e16.
MAX_DESIGN_CONDITION = 1e8


@dataclass(frozen=True)
class SimilarityParts:
    """Scale / rotation / translation parameters of a similarity transform."""

    scale: float
    angle: float
    tx: float
    ty: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"similarity scale must be > 0, got {self.scale}")


def similarity_to_matrix(parts: SimilarityParts) -> Homography:
    """Similarity as a homography: scale and rotate about the origin, then translate."""
    c = math.cos(parts.angle)
    s = math.sin(parts.angle)
    m = np.array(
        [
            [parts.scale * c, -parts.scale * s, parts.tx],
            [parts.scale * s, parts.scale * c, parts.ty],
            [0.0, 0.0, 1.0],
        ]
    )
    return Homography(m)


def single_match_homography(c: Correspondence) -> Homography:
    """Similarity estimate of the homography from one correspondence.

    Maps image-1 coordinates to image-2 coordinates. The linear part is
    (s2/s1) R(theta2 - theta1) and the translation is chosen so c.a.p lands
    exactly on c.b.p.
    """
    if c.a.scale <= 0.0 or c.b.scale <= 0.0:
        raise InvalidFeature("both features need a positive scale")
    r = c.b.scale / c.a.scale
    delta = c.b.angle - c.a.angle
    cos_d = math.cos(delta)
    sin_d = math.sin(delta)
    l00, l01 = r * cos_d, -r * sin_d
    l10, l11 = r * sin_d, r * cos_d
    u1, v1 = c.a.p.u, c.a.p.v
    tx = c.b.p.u - (l00 * u1 + l01 * v1)
    ty = c.b.p.v - (l10 * u1 + l11 * v1)
    return Homography(np.array([[l00, l01, tx], [l10, l11, ty], [0.0, 0.0, 1.0]]))


def _hartley_transform(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Similarity taking points to centroid 0 and RMS radius sqrt(2).

    Returns (normalized points, 3x3 transform). Raises on coincident points.
    """
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    rms = math.sqrt(float(np.mean(np.sum(centered**2, axis=1))))
    if rms == 0.0:
        raise DegenerateConfiguration("all points coincident")
    s = math.sqrt(2.0) / rms
    t = np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )
    return centered * s, t


def _check_minimal_sample(src: np.ndarray) -> None:
    """Reject a 4-point sample when any source triple is collinear."""
    spans = src.max(axis=0) - src.min(axis=0)
    bbox_area = float(spans[0] * spans[1])
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        ax, ay = src[j] - src[i]
        bx, by = src[k] - src[i]
        area = 0.5 * abs(ax * by - ay * bx)
        if area <= COLLINEARITY_AREA_RTOL * bbox_area:
            raise DegenerateConfiguration("3 of the 4 source points are collinear")


def _check_spread(src: np.ndarray) -> None:
    """Reject a larger point set that is collinear or coincident as a whole."""
    centered = src - src.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] == 0.0 or sv[1] <= 1e-8 * sv[0]:
        raise DegenerateConfiguration("source points span no area")


def dlt_solve(correspondences: list[Correspondence]) -> Homography:
    """Least-squares homography from 4 or more correspondences.

    Solves the stacked 2n x 8 linear system (last entry pinned to 1) on
    Hartley-normalized points, then de-normalizes. Exact for 4 noise-free
    correspondences in general position.

    Raises
    ------
    DegenerateConfiguration
        Collinear or coincident source points.
    IllConditioned
        The normalized design matrix is too badly conditioned to trust.
    """
    n = len(correspondences)
    if n < 4:
        raise ValueError(f"need at least 4 correspondences, got {n}")
    src = np.array([(c.a.p.u, c.a.p.v) for c in correspondences])
    dst = np.array([(c.b.p.u, c.b.p.v) for c in correspondences])
    if n == 4:
        _check_minimal_sample(src)
    else:
        _check_spread(src)
    src_n, t1 = _hartley_transform(src)
    dst_n, t2 = _hartley_transform(dst)

    a = np.zeros((2 * n, 8))
    b = np.empty(2 * n)
    u, v = src_n[:, 0], src_n[:, 1]
    x, y = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = u
    a[0::2, 1] = v
    a[0::2, 2] = 1.0
    a[0::2, 6] = -u * x
    a[0::2, 7] = -v * x
    a[1::2, 3] = u
    a[1::2, 4] = v
    a[1::2, 5] = 1.0
    a[1::2, 6] = -u * y
    a[1::2, 7] = -v * y
    b[0::2] = x
    b[1::2] = y

    h, _, rank, sv = np.linalg.lstsq(a, b, rcond=None)
    if rank < 8 or sv[-1] <= 0.0 or sv[0] / sv[-1] > MAX_DESIGN_CONDITION:
        raise IllConditioned("DLT system condition estimate exceeds bound")
    h_n = np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]
    )
    return Homography(np.linalg.inv(t2) @ h_n @ t1)
