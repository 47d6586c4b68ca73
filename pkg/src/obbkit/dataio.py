"""Readers and writers: DOTA annotations, scene JSON, detection JSONL, sweep CSV."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .assign import AssignmentResult, SampleSet
from .evaluation import Detection, GtRecord
from .geometry import OBB, min_area_rect
from .loss import SWEEP_HEADER

__all__ = [
    "DOTA_V1_CLASSES",
    "DotaAnnotation",
    "DotaFormatError",
    "parse_dota",
    "serialize_dota",
    "dota_to_gt_records",
    "load_dota_dir",
    "Scene",
    "read_scene",
    "write_scene",
    "assignment_to_json",
    "read_detections",
    "write_detections",
    "write_curve_csv",
    "read_curve_csv",
]

DOTA_V1_CLASSES = (
    "plane", "ship", "storage-tank", "baseball-diamond", "tennis-court",
    "basketball-court", "ground-track-field", "harbor", "bridge", "large-vehicle",
    "small-vehicle", "helicopter", "roundabout", "soccer-ball-field", "swimming-pool",
)


class DotaFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class DotaAnnotation:
    quad: tuple[tuple[float, float], ...]
    category: str
    class_id: int
    difficult: bool = False

    def to_obb(self) -> OBB:
        return min_area_rect(self.quad)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_dota(text: str, class_names: Sequence[str] = DOTA_V1_CLASSES) -> list[DotaAnnotation]:
    """Parse DOTA text: ``x1 y1 ... x4 y4 category difficult`` per data line.

    Lines whose first token is not numeric (``imagesource:``, ``gsd:``) are
    metadata and skipped, as are blank lines. Category names are matched
    case-sensitively against ``class_names``.
    """
    table = {name: i for i, name in enumerate(class_names)}
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = line.split()
        if not toks or not _is_number(toks[0]):
            continue
        if len(toks) != 10 or not all(_is_number(t) for t in toks[:8]) or _is_number(toks[8]):
            raise DotaFormatError(lineno, f"expected 8 coordinates, category, difficult: {line!r}")
        coords = [float(t) for t in toks[:8]]
        if not all(math.isfinite(v) for v in coords):
            raise DotaFormatError(lineno, "non-finite coordinate")
        if toks[9] not in ("0", "1"):
            raise DotaFormatError(lineno, f"difficult flag must be 0 or 1, got {toks[9]!r}")
        cat = toks[8]
        if cat not in table:
            raise DotaFormatError(lineno, f"unknown category {cat!r}")
        quad = tuple((coords[2 * k], coords[2 * k + 1]) for k in range(4))
        out.append(DotaAnnotation(quad, cat, table[cat], toks[9] == "1"))
    return out


def serialize_dota(records: Iterable[DotaAnnotation]) -> str:
    lines = []
    for r in records:
        coords = " ".join(repr(float(v)) for pt in r.quad for v in pt)
        lines.append(f"{coords} {r.category} {int(r.difficult)}")
    return "\n".join(lines) + ("\n" if lines else "")


def dota_to_gt_records(records: Iterable[DotaAnnotation], image_id: str) -> list[GtRecord]:
    return [GtRecord(r.to_obb(), r.class_id, image_id, r.difficult) for r in records]


def load_dota_dir(path, class_names: Sequence[str] = DOTA_V1_CLASSES) -> list[GtRecord]:
    """Load every ``*.txt`` in ``path``; the file stem is the image id."""
    gts: list[GtRecord] = []
    for f in sorted(Path(path).glob("*.txt")):
        try:
            recs = parse_dota(f.read_text(encoding="utf-8"), class_names)
        except DotaFormatError as e:
            raise DotaFormatError(e.lineno, f"{f.name}: {e}") from None
        gts.extend(dota_to_gt_records(recs, f.stem))
    return gts


def _obb_from_list(v) -> OBB:
    if len(v) != 5:
        raise ValueError(f"obb must have 5 numbers [cx, cy, w, h, theta], got {v}")
    return OBB.from_any(*map(float, v))


@dataclass
class Scene:
    gts: list[OBB]
    gt_classes: np.ndarray
    proposals: list[OBB]
    scores: np.ndarray | None = None


def read_scene(path) -> Scene:
    """Scene JSON: ``{"gts": [{obb, class}], "proposals": [{obb}], "scores": [[...]]?}``."""
    doc = json.loads(Path(path).read_text())
    gts = [_obb_from_list(g["obb"]) for g in doc.get("gts", [])]
    classes = np.array([int(g["class"]) for g in doc.get("gts", [])], dtype=int)
    props = [_obb_from_list(p["obb"]) for p in doc["proposals"]]
    scores = doc.get("scores")
    if scores is not None:
        scores = np.asarray(scores, dtype=float)
        if scores.ndim != 2 or len(scores) != len(props):
            raise ValueError("scores must be one row per proposal")
        if scores.min(initial=0.0) < 0 or scores.max(initial=0.0) > 1:
            raise ValueError("scores must lie in [0, 1]")
    return Scene(gts, classes, props, scores)


def write_scene(scene: Scene, path) -> None:
    doc = {
        "gts": [{"obb": list(g), "class": int(c)} for g, c in zip(scene.gts, scene.gt_classes)],
        "proposals": [{"obb": list(p)} for p in scene.proposals],
    }
    if scene.scores is not None:
        doc["scores"] = np.asarray(scene.scores).tolist()
    Path(path).write_text(json.dumps(doc, indent=1))


def assignment_to_json(a: AssignmentResult, s: SampleSet | None = None) -> dict:
    doc = {
        "labels": a.label_names(),
        "matched_gt": [int(v) for v in a.matched_gt],
        "matched_iou": [float(v) for v in a.matched_iou],
    }
    if s is not None:
        doc["sample"] = {
            "budget": s.budget,
            "positives": s.positives.tolist(),
            "focus_negatives": s.focus_negatives.tolist(),
            "normal_negatives": s.normal_negatives.tolist(),
        }
    return doc


def read_detections(path) -> list[Detection]:
    """JSON lines of ``{image_id, class_id, score, obb: [cx, cy, w, h, theta]}``."""
    dets = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            dets.append(Detection(_obb_from_list(d["obb"]), float(d["score"]), int(d["class_id"]), str(d["image_id"])))
        except (KeyError, ValueError, TypeError) as e:
            raise ValueError(f"{path}:{lineno}: bad detection record: {e}") from None
    return dets


def write_detections(dets: Iterable[Detection], path) -> None:
    with open(path, "w") as f:
        for d in dets:
            rec = {"image_id": d.image_id, "class_id": d.class_id, "score": d.score, "obb": list(d.box)}
            f.write(json.dumps(rec) + "\n")


def write_curve_csv(rows: Iterable[Sequence[float]], path) -> None:
    """Write sweep rows; ``repr`` keeps full double precision."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def read_curve_csv(path) -> list[tuple[float, float, float]]:
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if tuple(header) != SWEEP_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [tuple(float(v) for v in row) for row in r]
