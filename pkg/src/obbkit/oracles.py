"""Independent reference computations and the randomized oracle suites.

Everything here deliberately avoids the code paths it checks: the IoU
suite compares against grid rasterization, the gradient suite against
central differences, and the assignment suite against a loop-by-loop
transcription of the labeling rules.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry
from .assign import Label, cdla_assign, sample
from .codec import DeltaOffsets, canonicalize, decode, encode
from .geometry import OBB, obb_to_polygon, raster_iou_oracle
from .loss import BoxLoss, LossParams, reg_loss, reg_loss_grad

__all__ = [
    "SuiteResult",
    "random_obb",
    "random_overlapping_pair",
    "polygon_distance",
    "brute_force_cdla",
    "random_assignment_scene",
    "finite_difference_grad",
    "gradient_rel_error",
    "random_loss_config",
    "geometry_suite",
    "codec_suite",
    "gradient_suite",
    "assignment_suite",
    "run_all",
]


def _threads() -> int:
    try:
        n = int(os.environ.get("OBBKIT_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _thread_map(fn, items):
    # ordered results regardless of worker count
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    worst: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def line(self) -> str:
        return f"{self.name}: {self.passed} passed, {self.failed} failed, worst={self.worst:.3e}"


def random_obb(rng: np.random.Generator, lo: float = 1.0, hi: float = 100.0, center_scale: float = 0.0) -> OBB:
    a, b = rng.uniform(lo, hi, 2)
    theta = rng.uniform(-0.5 * math.pi, 0.5 * math.pi)
    cx, cy = rng.uniform(-center_scale, center_scale, 2) if center_scale else (0.0, 0.0)
    return OBB.from_any(cx, cy, max(a, b), min(a, b), theta)


def random_overlapping_pair(rng: np.random.Generator, lo: float = 1.0, hi: float = 100.0) -> tuple[OBB, OBB]:
    a = random_obb(rng, lo, hi)
    b = random_obb(rng, lo, hi)
    reach = 0.5 * (a.w + b.w)
    off = rng.uniform(-0.6 * reach, 0.6 * reach, 2)
    return a, OBB(b.cx + off[0], b.cy + off[1], b.w, b.h, b.theta)


def polygon_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Max over vertices of the distance to the nearest vertex of the other polygon."""
    d = np.linalg.norm(p[:, None, :] - q[None, :, :], axis=-1)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def brute_force_cdla(ious, scores, gt_classes) -> list[Label]:
    """Line-by-line transcription of the assignment rules, one proposal at a time."""
    out = []
    n_prop = len(ious)
    for i in range(n_prop):
        row = ious[i]
        if len(row) == 0:
            out.append(Label.NEG_NORMAL)
            continue
        best, arg = -1.0, -1
        for j in range(len(row)):
            if row[j] > best:
                best, arg = float(row[j]), j
        if 0.5 <= best <= 1.0:
            out.append(Label.POSITIVE)
        elif 0.4 <= best < 0.5:
            if scores is None:
                out.append(Label.NEG_NORMAL)
            else:
                p_tp = scores[i][int(gt_classes[arg])]
                p_bk = scores[i][-1]
                if p_tp < 0.5 and p_bk < 0.5:
                    out.append(Label.NEG_NORMAL)
                else:
                    out.append(Label.IGNORE)
        elif scores is not None and 0.0 <= best <= 0.3 and scores[i][-1] < 0.5:
            out.append(Label.NEG_FOCUS)
        else:
            out.append(Label.NEG_NORMAL)
    return out


def random_assignment_scene(
    rng: np.random.Generator, max_props: int = 2000, max_gts: int = 50, n_classes: int = 15, shape=None
):
    """IoU matrix biased toward the band edges, plus random scores and classes.

    Sizes are drawn up to ``max_props`` x ``max_gts`` unless ``shape`` fixes them.
    """
    if shape is None:
        n_p = int(rng.integers(10, max_props + 1))
        n_g = int(rng.integers(1, max_gts + 1))
    else:
        n_p, n_g = shape
    ious = rng.uniform(0.0, 1.0, (n_p, n_g)) ** 2
    edges = np.array([0.3, 0.4, 0.5])
    snap = rng.random((n_p, n_g)) < 0.05
    ious[snap] = rng.choice(edges, snap.sum()) + rng.choice([-1e-12, 0.0, 1e-12], snap.sum())
    ious = np.clip(ious, 0.0, 1.0)
    scores = rng.random((n_p, n_classes + 1))
    scores[rng.random(scores.shape) < 0.02] = 0.5
    gt_classes = rng.integers(0, n_classes, n_g)
    return ious, (scores if rng.random() < 0.8 else None), gt_classes


def random_loss_config(rng: np.random.Generator) -> tuple[DeltaOffsets, DeltaOffsets, LossParams]:
    a, b = rng.uniform(1.0, 10.0, 2)
    kind = BoxLoss.SMOOTH_L1 if rng.random() < 0.5 else BoxLoss.L1
    params = LossParams(beta=float(rng.uniform(0.2, 2.0)), box_loss_kind=kind, ar_w=max(a, b), ar_h=min(a, b))
    tg = rng.uniform(-math.pi, math.pi)
    t = DeltaOffsets(*rng.normal(0, 1, 4), math.sin(tg), math.cos(tg))
    tp = DeltaOffsets(*rng.normal(0, 1, 6))
    return t, tp, params


def finite_difference_grad(fn: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (fn(x + e) - fn(x - e)) / (2 * step)
    return g


def _near_kink(t, tp, params: LossParams, margin: float = 1e-3) -> bool:
    cross = tp[4] * t[5] - tp[5] * t[4]
    if abs(cross) < margin:
        return True
    resid = np.abs(np.asarray(t[:4]) - np.asarray(tp[:4]))
    if params.box_loss_kind is BoxLoss.L1:
        return bool(np.any(resid < margin))
    return False


def gradient_rel_error(t, tp, params: LossParams, step: float = 1e-6) -> float:
    """Max-norm relative error between analytic and central-difference gradients."""
    fd = finite_difference_grad(lambda v: reg_loss(t, DeltaOffsets(*v), params).total, np.asarray(tp), step)
    an = reg_loss_grad(t, tp, params)
    scale = max(np.abs(an).max(), np.abs(fd).max(), 1e-12)
    return float(np.abs(an - fd).max() / scale)


def geometry_suite(trials: int, seed: int, samples: int = 1024, tol: float = 0.01, iou_fn=None) -> SuiteResult:
    iou = iou_fn or geometry.rotated_iou
    rng = np.random.default_rng(seed)
    pairs = [random_overlapping_pair(rng) for _ in range(trials)]
    raster = _thread_map(lambda ab: raster_iou_oracle(ab[0], ab[1], samples), pairs)
    res = SuiteResult("geometry")
    for (a, b), r in zip(pairs, raster):
        v = iou(a, b)
        err = abs(v - r)
        res.worst = max(res.worst, err)
        good = err <= tol and v == iou(b, a) and iou(a, a) == 1.0
        if good:
            res.passed += 1
        else:
            res.failed += 1
    return res


def codec_suite(trials: int, seed: int, tol: float = 1e-9) -> SuiteResult:
    rng = np.random.default_rng(seed + 1)
    res = SuiteResult("codec")
    for _ in range(trials):
        g = random_obb(rng, center_scale=200.0)
        a = random_obb(rng, center_scale=200.0)
        d = encode(g, a)
        back = canonicalize(decode(d, a))
        err = polygon_distance(obb_to_polygon(back), obb_to_polygon(g))
        norm_err = abs(d.t_sin ** 2 + d.t_cos ** 2 - 1.0)
        res.worst = max(res.worst, err)
        if err < tol and norm_err < 1e-12:
            res.passed += 1
        else:
            res.failed += 1
    return res


def gradient_suite(trials: int, seed: int, tol: float = 1e-5) -> SuiteResult:
    rng = np.random.default_rng(seed + 2)
    res = SuiteResult("gradient")
    checked = 0
    while checked < trials:
        t, tp, params = random_loss_config(rng)
        if _near_kink(t, tp, params):
            continue
        checked += 1
        err = gradient_rel_error(t, tp, params)
        res.worst = max(res.worst, err)
        if err <= tol:
            res.passed += 1
        else:
            res.failed += 1
    return res


def assignment_suite(trials: int, seed: int, max_props: int = 400, max_gts: int = 20, budget: int = 256) -> SuiteResult:
    rng = np.random.default_rng(seed + 3)
    res = SuiteResult("assignment")
    for k in range(trials):
        ious, scores, classes = random_assignment_scene(rng, max_props, max_gts)
        fast = cdla_assign(ious, scores, classes)
        ref = brute_force_cdla(ious, scores, classes)
        mismatches = int(np.count_nonzero(fast.labels != np.array(ref, dtype=np.int8)))
        s = sample(fast, budget, seed + k)
        all_idx = np.concatenate([s.positives, s.focus_negatives, s.normal_negatives])
        caps_ok = (
            len(s.positives) <= budget // 4
            and len(s.focus_negatives) <= budget // 8
            and len(s) <= budget
            and len(np.unique(all_idx)) == len(all_idx)
            and not np.any(fast.labels[all_idx.astype(int)] == Label.IGNORE)
        )
        res.worst = max(res.worst, float(mismatches))
        if mismatches == 0 and caps_ok:
            res.passed += 1
        else:
            res.failed += 1
    return res


def run_all(trials: int, seed: int, iou_fn=None) -> list[SuiteResult]:
    return [
        geometry_suite(trials, seed, iou_fn=iou_fn),
        codec_suite(trials, seed),
        gradient_suite(trials, seed),
        assignment_suite(trials, seed),
    ]
