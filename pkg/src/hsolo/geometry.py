"""Core projective-geometry types and exact point-level operations.

Pixel coordinate convention: origin at the top-left image corner, x to the
right, y down. Every operation here is covariant with that choice, so nothing
else in the package depends on it, but test data and the file format follow it.

All types are immutable after construction and all operations are pure
functions, so values can be shared freely between concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateProjection, InvalidFeature, SingularMatrix

# Relative threshold (against the Frobenius norm) below which a homogeneous
# w-component or a determinant is treated as zero. Double precision leaves
# ample headroom for pixel-scale data.
SINGULARITY_RTOL = 1e-12

_TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Wrap an angle in radians into [-pi, pi)."""
    a = (float(angle) + math.pi) % _TWO_PI - math.pi
    # % can return 2*pi - ulp for tiny negative inputs; fold the edge back
    if a >= math.pi:
        a -= _TWO_PI
    return a


@dataclass(frozen=True)
class Point2:
    """An image point in pixels."""

    u: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "v", float(self.v))
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError(f"point coordinates must be finite, got ({self.u}, {self.v})")


@dataclass(frozen=True)
class AffineFeature:
    """A detected image point together with its scale and rotation byproducts.

    ``scale`` must be strictly positive; ``angle`` is normalized to [-pi, pi)
    on construction so every feature has a unique representation.
    """

    p: Point2
    scale: float
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "scale", float(self.scale))
        if not math.isfinite(self.scale) or self.scale <= 0.0:
            raise InvalidFeature(f"feature scale must be > 0, got {self.scale}")
        if not math.isfinite(float(self.angle)):
            raise InvalidFeature(f"feature angle must be finite, got {self.angle}")
        object.__setattr__(self, "angle", normalize_angle(self.angle))


@dataclass(frozen=True)
class Correspondence:
    """A matched pair of affine features, one per image."""

    a: AffineFeature
    b: AffineFeature

    def swapped(self) -> "Correspondence":
        return Correspondence(self.b, self.a)


def _canonicalize(m: np.ndarray) -> np.ndarray:
    """Scale a 3x3 matrix into its canonical projective representation.

    When the (3,3) entry is significant the matrix is scaled so that entry is
    exactly 1. Otherwise it is scaled to unit Frobenius norm with the first
    significant entry positive. Idempotent down to the bit level: an already
    canonical matrix passes through unchanged.
    """
    fro = float(np.linalg.norm(m))
    if fro == 0.0:
        raise ValueError("homography entries are all zero")
    if abs(m[2, 2]) > SINGULARITY_RTOL * fro:
        s = m[2, 2]
        if s != 1.0:
            m = m / s
        return m
    if abs(fro - 1.0) > SINGULARITY_RTOL:
        m = m / fro
    flat = m.ravel()
    for entry in flat:
        if abs(entry) > SINGULARITY_RTOL:
            if entry < 0.0:
                m = -m
            break
    return m


@dataclass(frozen=True, eq=False)
class Homography:
    """A 3x3 invertible projective transform.

    Stored in canonical form: scaled so the last entry is 1 whenever that
    entry is significant, otherwise unit Frobenius norm with the first
    significant entry positive. Construction rejects matrices whose
    determinant is zero up to :data:`SINGULARITY_RTOL`.
    """

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=float)
        if arr.shape == (9,):
            arr = arr.reshape(3, 3)
        if arr.shape != (3, 3):
            raise ValueError(f"homography must be 3x3 or flat 9, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("homography entries must be finite")
        arr = _canonicalize(np.array(arr, dtype=float))
        fro = float(np.linalg.norm(arr))
        det = float(np.linalg.det(arr))
        if abs(det) <= SINGULARITY_RTOL * fro**3:
            raise SingularMatrix(f"homography is singular to tolerance (det={det:.3e})")
        arr.flags.writeable = False
        object.__setattr__(self, "m", arr)
        object.__setattr__(self, "_fro", fro)

    @property
    def entries(self) -> tuple[float, ...]:
        """The nine entries h1..h9 in row-major order."""
        return tuple(float(x) for x in self.m.ravel())

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        m = np.eye(3)
        m[0, 2] = tx
        m[1, 2] = ty
        return cls(m)

    def __repr__(self) -> str:
        rows = "; ".join(" ".join(f"{x:.6g}" for x in row) for row in self.m)
        return f"Homography([{rows}])"


def project(h: Homography, p: Point2) -> Point2:
    """Apply a homography to a point.

    Raises :class:`DegenerateProjection` when the homogeneous w-component is
    below tolerance, i.e. the point maps (numerically) to the line at infinity.
    """
    m = h.m
    w = m[2, 0] * p.u + m[2, 1] * p.v + m[2, 2]
    if abs(w) <= SINGULARITY_RTOL * h._fro:
        raise DegenerateProjection(f"point ({p.u}, {p.v}) maps to the line at infinity")
    x = m[0, 0] * p.u + m[0, 1] * p.v + m[0, 2]
    y = m[1, 0] * p.u + m[1, 1] * p.v + m[1, 2]
    return Point2(x / w, y / w)


def reprojection_error(h: Homography, c: Correspondence) -> float:
    """Euclidean distance in pixels between project(h, c.a.p) and c.b.p.

    Propagates :class:`DegenerateProjection`; scoring loops that must not
    abort should use :func:`transfer_errors`, which maps degenerate
    projections to +infinity instead.
    """
    q = project(h, c.a.p)
    return math.hypot(q.u - c.b.p.u, q.v - c.b.p.v)


def compose(h1: Homography, h2: Homography) -> Homography:
    """The homography applying ``h2`` first, then ``h1``."""
    return Homography(h1.m @ h2.m)


def invert(h: Homography) -> Homography:
    """Inverse transform. Raises :class:`SingularMatrix` on near-singular input."""
    try:
        inv = np.linalg.inv(h.m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    return Homography(inv)


# ---------------------------------------------------------------------------
# Array helpers shared by the estimation loops. These operate on plain float
# arrays so hot paths avoid per-point object traffic.


def pool_arrays(pool) -> tuple[np.ndarray, np.ndarray]:
    """Split correspondences into (n, 2) source and target coordinate arrays."""
    src = np.array([(c.a.p.u, c.a.p.v) for c in pool], dtype=float).reshape(-1, 2)
    dst = np.array([(c.b.p.u, c.b.p.v) for c in pool], dtype=float).reshape(-1, 2)
    return src, dst


def transfer_errors(m: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Per-pair reprojection error of ``src -> dst`` under a 3x3 matrix.

    Degenerate projections (w-component below tolerance) get +infinity so a
    bad candidate model loses support instead of crashing the caller.
    """
    m = np.asarray(m, dtype=float)
    fro = float(np.linalg.norm(m))
    u, v = src[:, 0], src[:, 1]
    w = m[2, 0] * u + m[2, 1] * v + m[2, 2]
    bad = np.abs(w) <= SINGULARITY_RTOL * fro
    w_safe = np.where(bad, 1.0, w)
    x = (m[0, 0] * u + m[0, 1] * v + m[0, 2]) / w_safe
    y = (m[1, 0] * u + m[1, 1] * v + m[1, 2]) / w_safe
    err = np.hypot(x - dst[:, 0], y - dst[:, 1])
    err[bad] = np.inf
    return err
