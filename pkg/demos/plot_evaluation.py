"""
Average precision, 11-point and envelope
========================================

Detections are ranked by score and matched greedily to ground truth at an
IoU threshold. The 11-point rule averages the best precision at recall
0, 0.1, ..., 1; the envelope rule integrates the monotone upper envelope.
"""
from obbkit import OBB, APMode, Detection, GtRecord, average_precision, match_detections
from obbkit.evaluation import map_50_95

gts = [GtRecord(OBB(0, 0, 10, 10, 0), 0, "a"), GtRecord(OBB(0, 0, 10, 10, 0), 0, "b")]

# %%
# One good detection out of two objects: recall stops at 0.5.
res = match_detections([Detection(OBB(1, 0, 10, 10, 0), 0.8, 0, "a")], gts, 0.5)
print("VOC07", average_precision(res.curve, APMode.VOC07), "= 6/11")
print("VOC12", average_precision(res.curve, APMode.VOC12))

# %%
# A false positive ranked above the hit halves precision at that point.
dets = [Detection(OBB(90, 0, 10, 10, 0), 0.9, 0, "a"), Detection(OBB(1, 0, 10, 10, 0), 0.8, 0, "a")]
res = match_detections(dets, gts[:1], 0.5)
print("recall", res.curve.recall, "precision", res.curve.precision)
print("VOC07", average_precision(res.curve, "voc07"), "VOC12", average_precision(res.curve, "voc12"))

# %%
# Averaging over stricter thresholds can only lower the score.
print("mAP50:95", map_50_95(dets, gts[:1]))
