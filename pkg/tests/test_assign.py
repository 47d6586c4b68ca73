import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obbkit.assign import AssignmentResult, Label, cdla_assign, max_iou_assign, sample
from obbkit.oracles import brute_force_cdla, random_assignment_scene

N_CLS = 3
BG = N_CLS  # background column


def one(iou, tp=0.1, bg=0.1, cls=0):
    scores = np.full((1, N_CLS + 1), 0.05)
    scores[0, cls] = tp
    scores[0, BG] = bg
    return cdla_assign(np.array([[iou]]), scores, np.array([cls]))


class TestCdlaCases:
    def test_weak_band_confident_object(self):
        assert one(0.49, tp=0.81, bg=0.1).labels[0] == Label.IGNORE

    def test_weak_band_confident_background(self):
        assert one(0.45, tp=0.2, bg=0.56).labels[0] == Label.IGNORE

    def test_weak_band_unsure(self):
        assert one(0.47, tp=0.3, bg=0.4).labels[0] == Label.NEG_NORMAL

    @pytest.mark.parametrize("tp,bg", [(0.9, 0.9), (0.0, 0.0), (0.1, 0.95)])
    def test_positive_regardless(self, tp, bg):
        r = one(0.62, tp=tp, bg=bg)
        assert r.labels[0] == Label.POSITIVE and r.matched_gt[0] == 0

    def test_focus_negative(self):
        r = one(0.20, bg=0.30)
        assert r.labels[0] == Label.NEG_FOCUS
        assert 0 <= r.matched_iou[0] <= 0.3

    def test_low_iou_confident_background(self):
        assert one(0.20, bg=0.7).labels[0] == Label.NEG_NORMAL

    @pytest.mark.parametrize("tp,bg", [(0.9, 0.9), (0.1, 0.1), (0.6, 0.2), (0.2, 0.6)])
    def test_gap_band_falls_through(self, tp, bg):
        assert one(0.35, tp=tp, bg=bg).labels[0] == Label.NEG_NORMAL

    @pytest.mark.parametrize(
        "iou,expected",
        [(0.5, Label.POSITIVE), (0.4, Label.IGNORE), (0.3, Label.NEG_FOCUS), (0.0, Label.NEG_FOCUS), (1.0, Label.POSITIVE)],
    )
    def test_band_edges(self, iou, expected):
        assert one(iou, tp=0.9, bg=0.1).labels[0] == expected

    def test_uses_matched_gt_class(self):
        # proposal best matches gt 1 (class 2); only class 2's score counts
        ious = np.array([[0.1, 0.45]])
        scores = np.array([[0.9, 0.05, 0.1, 0.1]])
        r = cdla_assign(ious, scores, np.array([0, 2]))
        assert r.labels[0] == Label.NEG_NORMAL
        scores[0, 2] = 0.7
        assert cdla_assign(ious, scores, np.array([0, 2])).labels[0] == Label.IGNORE

    def test_tie_breaks_to_lowest_gt(self):
        r = cdla_assign(np.array([[0.7, 0.7, 0.2]]))
        assert r.matched_gt[0] == 0


class TestCdlaContracts:
    def test_warmup(self):
        ious = np.array([[0.45], [0.2], [0.35], [0.8]])
        r = cdla_assign(ious)
        assert r.labels.tolist() == [Label.NEG_NORMAL, Label.NEG_NORMAL, Label.NEG_NORMAL, Label.POSITIVE]

    def test_no_gts(self):
        r = cdla_assign(np.zeros((5, 0)), np.full((5, 4), 0.1), np.zeros(0, dtype=int))
        assert np.all(r.labels == Label.NEG_NORMAL)
        assert np.all(r.matched_gt == -1)

    def test_misaligned_scores(self):
        with pytest.raises(ValueError):
            cdla_assign(np.zeros((3, 2)), np.zeros((2, 4)), np.array([0, 1]))

    def test_scores_need_classes(self):
        with pytest.raises(ValueError):
            cdla_assign(np.zeros((3, 2)), np.zeros((3, 4)))

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            ious, scores, classes = random_assignment_scene(rng, max_props=500, max_gts=30)
            fast = cdla_assign(ious, scores, classes)
            assert fast.labels.tolist() == [int(v) for v in brute_force_cdla(ious, scores, classes)]

    @given(st.floats(0.4, 0.5, exclude_max=True), st.floats(0, 1), st.floats(0, 1))
    def test_weak_band_monotone(self, iou, tp, bg):
        lab = one(iou, tp=tp, bg=bg).labels[0]
        if tp < 0.5 and bg < 0.5:
            assert lab == Label.NEG_NORMAL
            assert one(iou, tp=0.5 + tp, bg=bg).labels[0] == Label.IGNORE
            assert one(iou, tp=tp, bg=0.5 + bg).labels[0] == Label.IGNORE
        else:
            assert lab == Label.IGNORE

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30)
    def test_partition_and_invariants(self, seed):
        rng = np.random.default_rng(seed)
        ious, scores, classes = random_assignment_scene(rng, max_props=300, max_gts=10)
        r = cdla_assign(ious, scores, classes)
        assert len(r.labels) == len(ious)
        assert set(np.unique(r.labels)) <= set(int(v) for v in Label)
        pos = r.labels == Label.POSITIVE
        assert np.all((r.matched_iou >= 0.5) == pos)
        focus = r.labels == Label.NEG_FOCUS
        assert np.all(r.matched_iou[focus] <= 0.3)
        if scores is not None:
            assert np.all(scores[focus, -1] < 0.5)

    def test_warmup_equivalence(self):
        rng = np.random.default_rng(8)
        ious, _, _ = random_assignment_scene(rng)
        a, b = cdla_assign(ious), max_iou_assign(ious)
        np.testing.assert_array_equal(a.indices(Label.POSITIVE), b.indices(Label.POSITIVE))
        np.testing.assert_array_equal(a.labels, b.labels)


class TestMaxIoU:
    def test_inclusive_threshold(self):
        r = max_iou_assign(np.array([[0.5], [0.49]]))
        assert r.labels.tolist() == [Label.POSITIVE, Label.NEG_NORMAL]

    def test_all_zero(self):
        assert np.all(max_iou_assign(np.zeros((4, 3))).labels == Label.NEG_NORMAL)

    def test_no_extra_labels(self):
        rng = np.random.default_rng(0)
        r = max_iou_assign(rng.random((200, 5)))
        assert set(np.unique(r.labels)) <= {Label.POSITIVE, Label.NEG_NORMAL}


def synthetic(n_pos, n_focus, n_norm, n_ign):
    labels = np.array(
        [Label.POSITIVE] * n_pos + [Label.NEG_FOCUS] * n_focus + [Label.NEG_NORMAL] * n_norm + [Label.IGNORE] * n_ign,
        dtype=np.int8,
    )
    rng = np.random.default_rng(0)
    labels = labels[rng.permutation(len(labels))]
    return AssignmentResult(labels, np.zeros(len(labels)), np.full(len(labels), -1))


class TestSample:
    def test_positive_cap(self):
        s = sample(synthetic(300, 5, 1000, 20), 512, seed=0)
        assert len(s.positives) == 128

    def test_focus_kept(self):
        s = sample(synthetic(100, 10, 1000, 0), 512, seed=0)
        assert len(s.focus_negatives) == 10
        assert len(s.normal_negatives) == 512 - 100 - 10

    def test_short_supply(self):
        s = sample(synthetic(3, 2, 4, 50), 64, seed=0)
        assert (len(s.positives), len(s.focus_negatives), len(s.normal_negatives)) == (3, 2, 4)

    def test_determinism(self):
        a = synthetic(300, 100, 1000, 20)
        s1, s2, s3 = sample(a, 256, 1), sample(a, 256, 1), sample(a, 256, 2)
        for f in ("positives", "focus_negatives", "normal_negatives"):
            np.testing.assert_array_equal(getattr(s1, f), getattr(s2, f))
            assert len(getattr(s1, f)) == len(getattr(s3, f))
        assert not np.array_equal(s1.normal_negatives, s3.normal_negatives)

    @pytest.mark.parametrize("n", [0, 4, 12, 100])
    def test_bad_budget(self, n):
        with pytest.raises(ValueError):
            sample(synthetic(1, 1, 1, 1), n)

    @given(st.integers(0, 400), st.integers(0, 200), st.integers(0, 800), st.integers(0, 100), st.sampled_from([8, 64, 256, 512]), st.integers(0, 1000))
    @settings(max_examples=100)
    def test_caps_and_exclusions(self, n_pos, n_focus, n_norm, n_ign, budget, seed):
        a = synthetic(n_pos, n_focus, n_norm, n_ign)
        s = sample(a, budget, seed)
        assert len(s.positives) <= budget // 4
        assert len(s.focus_negatives) <= budget // 8
        assert len(s) <= budget
        idx = np.concatenate([s.positives, s.focus_negatives, s.normal_negatives]).astype(int)
        assert len(np.unique(idx)) == len(idx)
        assert not np.any(a.labels[idx] == Label.IGNORE)
        assert np.all(a.labels[s.positives] == Label.POSITIVE)
        assert np.all(a.labels[s.focus_negatives] == Label.NEG_FOCUS)
        assert np.all(a.labels[s.normal_negatives] == Label.NEG_NORMAL)
        np.testing.assert_array_equal(np.sort(s.negatives), np.sort(np.concatenate([s.focus_negatives, s.normal_negatives])))
