"""Complex-plane box coding relative to an anchor.

A box is carried as ``(x, y, w, h, sin(theta), cos(theta))``. Encoding
rotates the centre offset into the anchor frame and expresses the target
angle as the rotation ``theta_g - theta_a`` through its sine/cosine pair,
so no width/height swapping is ever needed.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .geometry import HALF_PI, OBB, reduce_angle

__all__ = ["DeltaOffsets", "OBB6", "encode", "decode", "canonicalize", "encode_array", "decode_array"]


class DeltaOffsets(NamedTuple):
    t_x: float
    t_y: float
    t_w: float
    t_h: float
    t_sin: float
    t_cos: float


class OBB6(NamedTuple):
    x: float
    y: float
    w: float
    h: float
    sin_t: float
    cos_t: float


def encode(gt: OBB, anchor: OBB) -> DeltaOffsets:
    """Regression target of ``gt`` with respect to ``anchor``."""
    ca, sa = math.cos(anchor.theta), math.sin(anchor.theta)
    cg, sg = math.cos(gt.theta), math.sin(gt.theta)
    dx, dy = gt.cx - anchor.cx, gt.cy - anchor.cy
    return DeltaOffsets(
        (dx * ca + dy * sa) / anchor.w,
        (-dx * sa + dy * ca) / anchor.h,
        math.log(gt.w / anchor.w),
        math.log(gt.h / anchor.h),
        sg * ca - cg * sa,
        cg * ca + sg * sa,
    )


def decode(d: DeltaOffsets, anchor: OBB) -> OBB6:
    """Inverse of :func:`encode`. The (sin, cos) pair is rotated, not renormalized."""
    ca, sa = math.cos(anchor.theta), math.sin(anchor.theta)
    t_x, t_y, t_w, t_h, t_sin, t_cos = d
    return OBB6(
        t_x * anchor.w * ca - t_y * anchor.h * sa + anchor.cx,
        t_x * anchor.w * sa + t_y * anchor.h * ca + anchor.cy,
        anchor.w * math.exp(t_w),
        anchor.h * math.exp(t_h),
        t_sin * ca + t_cos * sa,
        t_cos * ca - t_sin * sa,
    )


def canonicalize(b: OBB6) -> OBB:
    """Map a six-element box to the long-side five-parameter form."""
    x, y, w, h, s, c = b
    norm = math.hypot(s, c)
    if norm == 0.0:
        raise ValueError("cannot recover an angle from a zero (sin, cos) vector")
    if not (w > 0 and h > 0):
        raise ValueError(f"box sides must be positive, got w={w}, h={h}")
    theta = math.atan2(s / norm, c / norm)
    if w < h:
        w, h = h, w
        theta += HALF_PI
    return OBB(float(x), float(y), float(w), float(h), reduce_angle(theta))


def encode_array(gt: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Vectorised :func:`encode` over ``(n, 5)`` arrays; returns ``(n, 6)``."""
    gt = np.asarray(gt, dtype=float).reshape(-1, 5)
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 5)
    ca, sa = np.cos(anchors[:, 4]), np.sin(anchors[:, 4])
    cg, sg = np.cos(gt[:, 4]), np.sin(gt[:, 4])
    dx, dy = gt[:, 0] - anchors[:, 0], gt[:, 1] - anchors[:, 1]
    return np.stack(
        [
            (dx * ca + dy * sa) / anchors[:, 2],
            (-dx * sa + dy * ca) / anchors[:, 3],
            np.log(gt[:, 2] / anchors[:, 2]),
            np.log(gt[:, 3] / anchors[:, 3]),
            sg * ca - cg * sa,
            cg * ca + sg * sa,
        ],
        axis=1,
    )


def decode_array(deltas: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Vectorised :func:`decode`; ``(n, 6)`` offsets against ``(n, 5)`` anchors."""
    deltas = np.asarray(deltas, dtype=float).reshape(-1, 6)
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 5)
    ca, sa = np.cos(anchors[:, 4]), np.sin(anchors[:, 4])
    wa, ha = anchors[:, 2], anchors[:, 3]
    tx, ty, tw, th, ts, tc = deltas.T
    return np.stack(
        [
            tx * wa * ca - ty * ha * sa + anchors[:, 0],
            tx * wa * sa + ty * ha * ca + anchors[:, 1],
            wa * np.exp(tw),
            ha * np.exp(th),
            ts * ca + tc * sa,
            tc * ca - ts * sa,
        ],
        axis=1,
    )
