"""
Label assignment with classification feedback
=============================================

Plain max-IoU assignment looks only at overlap. Feeding back the
classifier's scores lets the assigner ignore ambiguous proposals that the
classifier is already sure about, and flag low-overlap proposals that the
classifier wrongly calls foreground as focus negatives.
"""
import numpy as np

from obbkit import Label, cdla_assign, max_iou_assign, sample

# %%
# Five proposals, one ground truth of class 0. Score columns are
# (class 0, class 1, background).
ious = np.array([[0.62], [0.49], [0.45], [0.47], [0.20]])
scores = np.array([
    [0.70, 0.10, 0.20],
    [0.81, 0.05, 0.10],
    [0.20, 0.10, 0.56],
    [0.30, 0.20, 0.40],
    [0.10, 0.60, 0.30],
])
classes = np.array([0])

# %%
plain = max_iou_assign(ious)
fed = cdla_assign(ious, scores, classes)
for i in range(len(ious)):
    print(f"iou={ious[i, 0]:.2f}  max-iou: {plain.label_names()[i]:<10}  with scores: {fed.label_names()[i]}")

# %%
# Sampling a training batch keeps at most a quarter positives and an
# eighth focus negatives, and never draws ignored proposals.
rng = np.random.default_rng(0)
big = cdla_assign(rng.random((3000, 10)) ** 8, rng.random((3000, 16)), rng.integers(0, 15, 10))
s = sample(big, 512, seed=0)
print({lab.tag: int(np.count_nonzero(big.labels == lab)) for lab in Label})
print("sampled:", len(s.positives), "pos,", len(s.focus_negatives), "focus,", len(s.normal_negatives), "normal")
