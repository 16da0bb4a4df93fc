"""Text formats for correspondence pools and estimation results.

Correspondence files are comma-separated with a version header. Full rows
carry both feature points plus their scale/angle byproducts; point-only rows
(four coordinates) are accepted for data from sources that do not export
byproducts, and loaders flag their absence so callers can reject them where
byproducts are required. An optional trailing 0/1 column marks ground-truth
inliers.

Result documents are line-oriented key: value text with a fixed key order so
runs can be diffed. Timing is written as 0 unless explicitly included, keeping
default outputs byte-reproducible.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .exceptions import FileFormatError, InvalidFeature
from .geometry import AffineFeature, Correspondence, Point2
from .robust import EstimationResult

CORR_HEADER = "hsolo-corr v1"
RESULT_HEADER = "hsolo-result v1"

_FULL_FIELDS = 8  # u1,v1,s1,theta1,u2,v2,s2,theta2
_POINT_FIELDS = 4  # u1,v1,u2,v2


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class LoadedCorrespondences:
    """A parsed correspondence file.

    ``inlier_mask`` is None when the file carries no ground-truth column.
    ``has_byproducts`` is False for point-only files, whose features carry
    placeholder scale 1 / angle 0.
    """

    correspondences: list[Correspondence]
    inlier_mask: np.ndarray | None
    has_byproducts: bool


def load_correspondences(path) -> LoadedCorrespondences:
    """Read a correspondence file, reporting malformed lines by number."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise FileFormatError("empty file", line=1)
    header = lines[0].strip()
    if header != CORR_HEADER:
        if header.startswith("hsolo-corr"):
            raise FileFormatError(
                f"unsupported format version {header!r}, expected {CORR_HEADER!r}", line=1
            )
        raise FileFormatError(f"missing {CORR_HEADER!r} header", line=1)

    correspondences: list[Correspondence] = []
    flags: list[bool] = []
    n_fields: int | None = None
    for lineno, raw in enumerate(lines[1:], start=2):
        stripped = raw.strip()
        if not stripped:
            continue
        fields = [f.strip() for f in stripped.split(",")]
        if n_fields is None:
            if len(fields) not in (_POINT_FIELDS, _POINT_FIELDS + 1, _FULL_FIELDS, _FULL_FIELDS + 1):
                raise FileFormatError(
                    f"expected 4, 5, 8 or 9 comma-separated fields, got {len(fields)}", line=lineno
                )
            n_fields = len(fields)
        elif len(fields) != n_fields:
            raise FileFormatError(
                f"expected {n_fields} fields as on previous lines, got {len(fields)}", line=lineno
            )
        has_flag = n_fields in (_POINT_FIELDS + 1, _FULL_FIELDS + 1)
        full = n_fields >= _FULL_FIELDS
        if has_flag:
            flag_field = fields[-1]
            if flag_field not in ("0", "1"):
                raise FileFormatError(
                    f"ground-truth flag must be 0 or 1, got {flag_field!r}", line=lineno
                )
            flags.append(flag_field == "1")
            fields = fields[:-1]
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise FileFormatError(f"non-numeric field: {exc}", line=lineno) from None
        try:
            if full:
                u1, v1, s1, t1, u2, v2, s2, t2 = values
                corr = Correspondence(
                    AffineFeature(Point2(u1, v1), s1, t1),
                    AffineFeature(Point2(u2, v2), s2, t2),
                )
            else:
                u1, v1, u2, v2 = values
                corr = Correspondence(
                    AffineFeature(Point2(u1, v1), 1.0, 0.0),
                    AffineFeature(Point2(u2, v2), 1.0, 0.0),
                )
        except (InvalidFeature, ValueError) as exc:
            raise FileFormatError(str(exc), line=lineno) from None
        correspondences.append(corr)

    mask = np.array(flags, dtype=bool) if flags else None
    has_byproducts = n_fields in (_FULL_FIELDS, _FULL_FIELDS + 1)
    return LoadedCorrespondences(correspondences, mask, has_byproducts)


def save_correspondences(path, correspondences: list[Correspondence], inlier_mask=None) -> None:
    """Write a full-format correspondence file (17 significant digits).

    ``inlier_mask``, when given, must match the list length and adds the
    trailing ground-truth column.
    """
    if inlier_mask is not None and len(inlier_mask) != len(correspondences):
        raise ValueError(
            f"mask length {len(inlier_mask)} != {len(correspondences)} correspondences"
        )
    out = [CORR_HEADER]
    for i, c in enumerate(correspondences):
        fields = [
            _fmt(c.a.p.u),
            _fmt(c.a.p.v),
            _fmt(c.a.scale),
            _fmt(c.a.angle),
            _fmt(c.b.p.u),
            _fmt(c.b.p.v),
            _fmt(c.b.scale),
            _fmt(c.b.angle),
        ]
        if inlier_mask is not None:
            fields.append("1" if inlier_mask[i] else "0")
        out.append(",".join(fields))
    Path(path).write_text("\n".join(out) + "\n")


def _config_echo(config) -> str:
    parts = []
    for field in dataclasses.fields(config):
        parts.append(f"{field.name}={getattr(config, field.name)!r}")
    return " ".join(parts)


def write_result(stream: TextIO, result: EstimationResult, config, include_timing: bool = False) -> None:
    """Write a result document to an open text stream.

    Key order is fixed: model, inliers, support, iterations, elapsed_s,
    config. ``elapsed_s`` is 0 unless ``include_timing``; real wall time makes
    otherwise-identical runs differ byte-wise.
    """
    entries = " ".join(repr(float(v)) for v in result.model.m.ravel())
    indices = " ".join(str(int(i)) for i in result.inlier_indices)
    stream.write(f"{RESULT_HEADER}\n")
    stream.write(f"model: {entries}\n")
    stream.write(f"inliers: {indices}\n")
    stream.write(f"support: {result.support}\n")
    stream.write(f"iterations: {result.iterations_run}\n")
    elapsed = f"{result.elapsed:.6f}" if include_timing else "0"
    stream.write(f"elapsed_s: {elapsed}\n")
    stream.write(f"config: {_config_echo(config)}\n")


def save_result(path, result: EstimationResult, config, include_timing: bool = False) -> None:
    """Write a result document to a file. See :func:`write_result`."""
    with open(path, "w") as fh:
        write_result(fh, result, config, include_timing=include_timing)
