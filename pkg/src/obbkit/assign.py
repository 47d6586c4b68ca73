"""Proposal labelling from IoU bands and fed-back class scores, plus budgeted sampling.

Score vectors hold one probability per object class followed by the
background probability (background is the last column).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Label",
    "AssignmentResult",
    "SampleSet",
    "cdla_assign",
    "max_iou_assign",
    "sample",
    "POS_IOU",
    "WEAK_IOU",
    "FOCUS_IOU",
    "SCORE_THRESH",
]

POS_IOU = 0.5
WEAK_IOU = 0.4
FOCUS_IOU = 0.3
SCORE_THRESH = 0.5


class Label(enum.IntEnum):
    POSITIVE = 0
    NEG_NORMAL = 1
    NEG_FOCUS = 2
    IGNORE = 3

    @property
    def tag(self) -> str:
        return self.name.lower()


@dataclass
class AssignmentResult:
    """Per-proposal labels.

    ``matched_gt`` is the argmax ground-truth index for positives and -1
    otherwise; ``matched_iou`` is the max IoU over ground truths.
    """

    labels: np.ndarray
    matched_iou: np.ndarray
    matched_gt: np.ndarray

    def __len__(self):
        return len(self.labels)

    def indices(self, label: Label) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def label_names(self) -> list[str]:
        return [Label(v).tag for v in self.labels]


@dataclass
class SampleSet:
    positives: np.ndarray
    focus_negatives: np.ndarray
    normal_negatives: np.ndarray
    budget: int

    @property
    def negatives(self) -> np.ndarray:
        return np.concatenate([self.focus_negatives, self.normal_negatives])

    def __len__(self):
        return len(self.positives) + len(self.focus_negatives) + len(self.normal_negatives)


def _max_match(ious: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # argmax picks the lowest gt index on ties
    gt_idx = np.argmax(ious, axis=1)
    return ious[np.arange(len(ious)), gt_idx], gt_idx


def _as_ious(ious) -> np.ndarray:
    ious = np.asarray(ious, dtype=float)
    if ious.ndim != 2:
        raise ValueError(f"IoU matrix must be 2-D, got shape {ious.shape}")
    return ious


def cdla_assign(ious, scores=None, gt_classes=None) -> AssignmentResult:
    """Label proposals from IoU bands refined by fed-back classification scores.

    Args:
        ious: ``(P, G)`` IoU matrix.
        scores: optional ``(P, C + 1)`` score matrix, background last. ``None``
            during warm-up, when the score-dependent bands fall back to
            normal negatives.
        gt_classes: ``(G,)`` class index of each ground truth; required
            with ``scores``.

    Returns:
        AssignmentResult with one label per proposal.
    """
    ious = _as_ious(ious)
    n_prop, n_gt = ious.shape
    if n_gt == 0:
        return AssignmentResult(
            np.full(n_prop, Label.NEG_NORMAL, dtype=np.int8), np.zeros(n_prop), np.full(n_prop, -1)
        )
    best, gt_idx = _max_match(ious)
    labels = np.full(n_prop, Label.NEG_NORMAL, dtype=np.int8)

    pos = best >= POS_IOU
    weak = (best >= WEAK_IOU) & ~pos
    low = best <= FOCUS_IOU

    if scores is not None:
        scores = np.asarray(scores, dtype=float)
        if scores.ndim != 2 or scores.shape[0] != n_prop:
            raise ValueError(f"scores shape {scores.shape} not aligned with {n_prop} proposals")
        if gt_classes is None:
            raise ValueError("gt_classes is required when scores are given")
        gt_classes = np.asarray(gt_classes, dtype=int)
        if gt_classes.shape != (n_gt,):
            raise ValueError(f"expected {n_gt} gt classes, got {gt_classes.shape}")
        n_cls = scores.shape[1] - 1
        if gt_classes.size and (gt_classes.min() < 0 or gt_classes.max() >= n_cls):
            raise ValueError(f"gt class index outside [0, {n_cls})")
        bg = scores[:, -1]
        tp = scores[np.arange(n_prop), gt_classes[gt_idx]]
        confident = (tp >= SCORE_THRESH) | (bg >= SCORE_THRESH)
        labels[weak & confident] = Label.IGNORE
        labels[low & (bg < SCORE_THRESH)] = Label.NEG_FOCUS
    labels[pos] = Label.POSITIVE

    matched = np.where(pos, gt_idx, -1)
    return AssignmentResult(labels, best, matched)


def max_iou_assign(ious, pos_thresh: float = POS_IOU) -> AssignmentResult:
    """Baseline: positive at max IoU >= ``pos_thresh``, negative otherwise."""
    ious = _as_ious(ious)
    n_prop, n_gt = ious.shape
    if n_gt == 0:
        return AssignmentResult(
            np.full(n_prop, Label.NEG_NORMAL, dtype=np.int8), np.zeros(n_prop), np.full(n_prop, -1)
        )
    best, gt_idx = _max_match(ious)
    pos = best >= pos_thresh
    labels = np.where(pos, Label.POSITIVE, Label.NEG_NORMAL).astype(np.int8)
    return AssignmentResult(labels, best, np.where(pos, gt_idx, -1))


def sample(a: AssignmentResult, budget_n: int, seed: int = 0) -> SampleSet:
    """Draw the training subset: up to N/4 positives, N/8 focus negatives, rest normal.

    Ignored proposals are never drawn. Draws are uniform without replacement
    from a generator seeded with ``seed``; each returned index array is sorted.
    """
    if budget_n < 8 or budget_n % 8:
        raise ValueError(f"budget must be a positive multiple of 8, got {budget_n}")
    rng = np.random.default_rng(seed)

    def choose(pool: np.ndarray, k: int) -> np.ndarray:
        k = min(len(pool), k)
        return np.sort(rng.choice(pool, size=k, replace=False)) if k else np.zeros(0, dtype=int)

    ps = choose(a.indices(Label.POSITIVE), budget_n // 4)
    nsf = choose(a.indices(Label.NEG_FOCUS), budget_n // 8)
    remaining = budget_n - len(ps) - len(nsf)
    nsn = choose(a.indices(Label.NEG_NORMAL), remaining)
    return SampleSet(ps, nsf, nsn, budget_n)
