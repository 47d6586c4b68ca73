"""Regression losses on complex-plane offsets.

The angle term is the trigonometric loss ``sqrt(w/h) * |sin(theta_p - theta_g)|``
written as a cross product of the predicted and target (sin, cos) pairs, so it
is periodic in pi and smooth across the [-pi/2, pi/2) boundary.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .codec import DeltaOffsets, encode
from .geometry import OBB, rotated_iou

__all__ = [
    "BoxLoss",
    "LossParams",
    "LossValue",
    "smooth_l1",
    "l1",
    "tlf_angle_loss",
    "reg_loss",
    "reg_loss_grad",
    "loss_sweep",
    "raw_angle_smooth_l1",
    "SWEEP_HEADER",
]

SWEEP_HEADER = ("theta_p", "tlf", "one_minus_iou")
BOX_TERMS = ("x", "y", "w", "h")


class BoxLoss(enum.Enum):
    SMOOTH_L1 = "smooth_l1"
    L1 = "l1"


@dataclass(frozen=True)
class LossParams:
    """Loss configuration.

    ``ar_w``/``ar_h`` are the long and short sides of the target box and set
    the aspect-ratio factor ``sqrt(ar_w / ar_h)`` on the angle term.
    """

    beta: float = 1.0
    box_loss_kind: BoxLoss = BoxLoss.SMOOTH_L1
    ar_w: float = 1.0
    ar_h: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (self.ar_w >= self.ar_h > 0):
            raise ValueError(f"need ar_w >= ar_h > 0, got {self.ar_w}, {self.ar_h}")

    @property
    def ar_factor(self) -> float:
        return math.sqrt(self.ar_w / self.ar_h)


@dataclass
class LossValue:
    total: float
    per_component: dict[str, float] = field(default_factory=dict)


def smooth_l1(x: float, beta: float = 1.0) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    ax = abs(x)
    if ax < beta:
        return 0.5 * x * x / beta
    return ax - 0.5 * beta


def l1(x: float) -> float:
    return abs(x)


def _smooth_l1_deriv(x: float, beta: float) -> float:
    if abs(x) < beta:
        return x / beta
    return math.copysign(1.0, x)


def _sign(x: float) -> float:
    # subgradient convention: 0 at the kink
    return 0.0 if x == 0 else math.copysign(1.0, x)


def _cross(t: DeltaOffsets, tp: DeltaOffsets) -> float:
    return tp[4] * t[5] - tp[5] * t[4]


def tlf_angle_loss(t: DeltaOffsets, tp: DeltaOffsets, p: LossParams = LossParams()) -> float:
    """Aspect-ratio weighted angle loss between target ``t`` and prediction ``tp``."""
    return p.ar_factor * abs(_cross(t, tp))


def reg_loss(t: DeltaOffsets, tp: DeltaOffsets, p: LossParams = LossParams()) -> LossValue:
    """Box terms (smooth-L1 or L1 on x, y, w, h) plus the angle term, unweighted."""
    comps: dict[str, float] = {}
    for i, name in enumerate(BOX_TERMS):
        diff = t[i] - tp[i]
        if p.box_loss_kind is BoxLoss.SMOOTH_L1:
            comps[name] = smooth_l1(diff, p.beta)
        else:
            comps[name] = l1(diff)
    comps["angle"] = tlf_angle_loss(t, tp, p)
    return LossValue(total=sum(comps.values()), per_component=comps)


def reg_loss_grad(t: DeltaOffsets, tp: DeltaOffsets, p: LossParams = LossParams()) -> np.ndarray:
    """Gradient of :func:`reg_loss` with respect to the six prediction components.

    At kinks (zero residual for L1, zero cross product for the angle term)
    the zero subgradient is returned.
    """
    g = np.zeros(6)
    for i in range(4):
        diff = t[i] - tp[i]
        if p.box_loss_kind is BoxLoss.SMOOTH_L1:
            g[i] = -_smooth_l1_deriv(diff, p.beta)
        else:
            g[i] = -_sign(diff)
    s = _sign(_cross(t, tp)) * p.ar_factor
    g[4] = s * t[5]
    g[5] = -s * t[4]
    return g


def raw_angle_smooth_l1(theta_p: float, theta_g: float, beta: float = 1.0) -> float:
    """Baseline: smooth-L1 applied directly to the raw angle difference."""
    return smooth_l1(theta_p - theta_g, beta)


def loss_sweep(theta_g: float, ar: float, grid_n: int) -> list[tuple[float, float, float]]:
    """Sweep the predicted angle over [-pi/2, pi/2) for a fixed target box.

    Target and prediction share centre and dimensions (``ar`` x 1); only the
    angle differs. Returns ``(theta_p, tlf, 1 - IoU)`` per grid point.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be >= 16")
    if not ar >= 1:
        raise ValueError("aspect ratio must be >= 1")
    params = LossParams(ar_w=ar, ar_h=1.0)
    anchor = OBB(0.0, 0.0, ar, 1.0, 0.0)
    gt = OBB.from_any(0.0, 0.0, ar, 1.0, theta_g)
    t = encode(gt, anchor)
    rows = []
    for k in range(grid_n):
        theta_p = -0.5 * math.pi + k * math.pi / grid_n
        pred = OBB(0.0, 0.0, ar, 1.0, theta_p)
        tp = encode(pred, anchor)
        rows.append((theta_p, tlf_angle_loss(t, tp, params), 1.0 - rotated_iou(gt, pred)))
    return rows
