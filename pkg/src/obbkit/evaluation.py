"""VOC-style detection evaluation for oriented boxes."""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import OBB, rotated_iou

__all__ = [
    "APMode",
    "Detection",
    "GtRecord",
    "PrCurve",
    "MatchResult",
    "match_detections",
    "average_precision",
    "mean_ap",
    "evaluate",
    "map_50_95",
    "COCO_THRESHOLDS",
]

COCO_THRESHOLDS = tuple(np.round(np.arange(0.5, 0.951, 0.05), 2))


class APMode(enum.Enum):
    VOC07 = "voc07"
    VOC12 = "voc12"


@dataclass(frozen=True)
class Detection:
    box: OBB
    score: float
    class_id: int
    image_id: str

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class GtRecord:
    box: OBB
    class_id: int
    image_id: str
    difficult: bool = False


@dataclass
class PrCurve:
    recall: np.ndarray
    precision: np.ndarray
    n_gt: int


@dataclass
class MatchResult:
    """Flags are aligned with ``order`` (detections sorted by score).

    A detection that is neither TP nor FP was absorbed by a difficult GT.
    """

    order: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    curve: PrCurve


def match_detections(
    dets: Sequence[Detection], gts: Sequence[GtRecord], iou_thresh: float = 0.5
) -> MatchResult:
    """Greedy per-image matching of one class's detections in score order.

    Each detection takes the highest-IoU still-unmatched non-difficult ground
    truth; it is a TP when that IoU reaches ``iou_thresh``. Failing that, a
    detection overlapping a difficult ground truth at the threshold is
    dropped from both counts; otherwise it is a FP.
    """
    if not 0.0 < iou_thresh < 1.0:
        raise ValueError("iou_thresh must lie in (0, 1)")
    by_image: dict[str, list[int]] = defaultdict(list)
    for j, g in enumerate(gts):
        by_image[g.image_id].append(j)
    n_gt = sum(1 for g in gts if not g.difficult)

    scores = np.array([d.score for d in dets], dtype=float)
    order = np.argsort(-scores, kind="stable")
    tp = np.zeros(len(dets), dtype=bool)
    fp = np.zeros(len(dets), dtype=bool)
    taken = np.zeros(len(gts), dtype=bool)

    for rank, i in enumerate(order):
        det = dets[i]
        best_iou, best_j, hits_difficult = -1.0, -1, False
        for j in by_image.get(det.image_id, ()):
            g = gts[j]
            iou = rotated_iou(det.box, g.box)
            if g.difficult:
                hits_difficult |= iou >= iou_thresh
            elif not taken[j] and iou > best_iou:
                best_iou, best_j = iou, j
        if best_j >= 0 and best_iou >= iou_thresh:
            tp[rank] = True
            taken[best_j] = True
        elif not hits_difficult:
            fp[rank] = True

    keep = tp | fp
    ctp = np.cumsum(tp[keep])
    cfp = np.cumsum(fp[keep])
    recall = ctp / n_gt if n_gt else np.zeros(len(ctp))
    precision = ctp / np.maximum(ctp + cfp, np.finfo(float).eps)
    return MatchResult(order, tp, fp, PrCurve(recall.astype(float), precision.astype(float), n_gt))


def average_precision(curve: PrCurve, mode: APMode | str = APMode.VOC12) -> float:
    """11-point interpolated (VOC07) or all-point envelope (VOC12) AP."""
    mode = APMode(mode)
    if curve.n_gt == 0 or len(curve.recall) == 0:
        return 0.0
    rec, prec = np.asarray(curve.recall), np.asarray(curve.precision)
    if mode is APMode.VOC07:
        ap = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            mask = rec >= t - 1e-12
            ap += prec[mask].max() if mask.any() else 0.0
        return ap / 11.0
    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    idx = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


def mean_ap(per_class_ap: Mapping[int, float]) -> float:
    if not per_class_ap:
        raise ValueError("mean_ap needs at least one class")
    return float(np.mean(list(per_class_ap.values())))


def evaluate(
    dets: Iterable[Detection],
    gts: Iterable[GtRecord],
    iou_thresh: float = 0.5,
    mode: APMode | str = APMode.VOC12,
    classes: Iterable[int] | None = None,
) -> dict[int, float]:
    """Per-class AP over every class present in ``gts`` (or ``classes``)."""
    dets, gts = list(dets), list(gts)
    if classes is None:
        classes = sorted({g.class_id for g in gts})
    out = {}
    for c in classes:
        res = match_detections([d for d in dets if d.class_id == c], [g for g in gts if g.class_id == c], iou_thresh)
        out[c] = average_precision(res.curve, mode)
    return out


def map_50_95(dets, gts, mode: APMode | str = APMode.VOC12, classes=None) -> float:
    """Mean of mAP over IoU thresholds 0.50:0.05:0.95."""
    dets, gts = list(dets), list(gts)
    return float(np.mean([mean_ap(evaluate(dets, gts, t, mode, classes)) for t in COCO_THRESHOLDS]))
