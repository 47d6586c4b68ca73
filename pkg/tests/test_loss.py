import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import spearmanr

from obbkit.codec import DeltaOffsets
from obbkit.loss import (
    BoxLoss,
    LossParams,
    loss_sweep,
    raw_angle_smooth_l1,
    reg_loss,
    reg_loss_grad,
    smooth_l1,
    tlf_angle_loss,
)
from obbkit.oracles import finite_difference_grad, gradient_rel_error, random_loss_config, _near_kink

angles = st.floats(-math.pi, math.pi)


def unit(theta, box=(0.0, 0.0, 0.0, 0.0)):
    return DeltaOffsets(*box, math.sin(theta), math.cos(theta))


class TestSmoothL1:
    @pytest.mark.parametrize("x,beta,expected", [(0, 1, 0), (0.5, 1, 0.125), (2, 1, 1.5), (-2, 1, 1.5)])
    def test_values(self, x, beta, expected):
        assert smooth_l1(x, beta) == expected

    @pytest.mark.parametrize("beta", [0.1, 1.0, 3.0])
    def test_c1_at_transition(self, beta):
        h = 1e-7
        assert smooth_l1(beta - h, beta) == pytest.approx(smooth_l1(beta + h, beta), abs=1e-6)
        left = (smooth_l1(beta, beta) - smooth_l1(beta - h, beta)) / h
        right = (smooth_l1(beta + h, beta) - smooth_l1(beta, beta)) / h
        assert left == pytest.approx(right, abs=1e-5)

    def test_beta_positive(self):
        with pytest.raises(ValueError):
            smooth_l1(1.0, 0.0)


class TestAngleLoss:
    def test_zero_error(self):
        t = unit(0.3)
        assert tlf_angle_loss(t, t) == 0.0

    def test_pi_over_six(self):
        assert tlf_angle_loss(unit(0.0), unit(math.pi / 6)) == pytest.approx(0.5, abs=1e-15)

    def test_aspect_ratio_factor(self):
        p = LossParams(ar_w=4.0, ar_h=1.0)
        assert tlf_angle_loss(unit(0.0), unit(math.pi / 6), p) == pytest.approx(1.0, abs=1e-15)

    def test_symmetric_point(self):
        assert tlf_angle_loss(unit(0.4), unit(0.4 + math.pi)) == pytest.approx(0.0, abs=1e-15)

    @given(angles, angles)
    def test_symmetries(self, a, b):
        base = tlf_angle_loss(unit(b), unit(a))
        assert tlf_angle_loss(unit(b), unit(a + math.pi)) == pytest.approx(base, abs=1e-12)
        assert tlf_angle_loss(unit(a), unit(b)) == pytest.approx(base, abs=1e-15)

    @given(angles, angles, st.floats(1, 50))
    def test_range(self, a, b, ar):
        p = LossParams(ar_w=ar, ar_h=1.0)
        v = tlf_angle_loss(unit(b), unit(a), p)
        assert 0.0 <= v <= math.sqrt(ar) + 1e-12
        assert v == pytest.approx(math.sqrt(ar) * abs(math.sin(a - b)), abs=1e-12)

    def test_unnormalized_prediction_is_raw(self):
        t = unit(0.0)
        tp = DeltaOffsets(0, 0, 0, 0, 2.0, 0.0)
        assert tlf_angle_loss(t, tp) == 2.0

    def test_params_validation(self):
        with pytest.raises(ValueError):
            LossParams(ar_w=1.0, ar_h=2.0)
        with pytest.raises(ValueError):
            LossParams(beta=0.0)


class TestRegLoss:
    def test_zero(self):
        t = DeltaOffsets(0.1, -0.2, 0.3, 0.0, 0.6, 0.8)
        v = reg_loss(t, t)
        assert v.total == 0.0
        assert set(v.per_component) == {"x", "y", "w", "h", "angle"}

    def test_x_only(self):
        t = unit(0.0)
        tp = DeltaOffsets(0.5, 0, 0, 0, 0, 1)
        assert reg_loss(t, tp).total == pytest.approx(0.125)

    def test_angle_only(self):
        assert reg_loss(unit(0.0), unit(math.pi / 6)).total == pytest.approx(0.5)

    def test_l1_kind(self):
        p = LossParams(box_loss_kind=BoxLoss.L1)
        tp = DeltaOffsets(0.5, -0.25, 0, 0, 0, 1)
        v = reg_loss(unit(0.0), tp, p)
        assert v.per_component["x"] == 0.5 and v.per_component["y"] == 0.25

    def test_total_is_sum(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            t, tp, p = random_loss_config(rng)
            v = reg_loss(t, tp, p)
            assert abs(v.total - sum(v.per_component.values())) <= 1e-12


class TestGradient:
    def test_rotation_derivative(self):
        # d/dphi |sin(phi - theta_g)| at phi - theta_g = pi/6 is cos(pi/6)
        t, tp = unit(0.0), unit(math.pi / 6)
        g = reg_loss_grad(t, tp)
        tangent = np.array([0, 0, 0, 0, math.cos(math.pi / 6), -math.sin(math.pi / 6)])
        assert g @ tangent == pytest.approx(math.cos(math.pi / 6), abs=1e-15)

    def test_finite_differences(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 1000:
            t, tp, p = random_loss_config(rng)
            if _near_kink(t, tp, p):
                continue
            checked += 1
            assert gradient_rel_error(t, tp, p) <= 1e-5

    def test_kink_subgradient(self):
        p = LossParams(ar_w=4.0, ar_h=1.0, box_loss_kind=BoxLoss.L1)
        t = unit(0.2, (0.1, 0.2, 0.3, 0.4))
        g = reg_loss_grad(t, t, p)
        assert np.all(np.abs(g) <= math.sqrt(4.0))

    def test_smooth_l1_partials(self):
        p = LossParams(beta=1.0)
        t = unit(0.0, (0.0, 0.0, 0.0, 0.0))
        tp = DeltaOffsets(0.5, 3.0, -0.25, -3.0, 0.0, 1.0)
        g = reg_loss_grad(t, tp, p)
        np.testing.assert_allclose(g[:4], [0.5, 1.0, -0.25, -1.0])

    def test_fd_helper(self):
        g = finite_difference_grad(lambda v: float(v @ v), np.array([1.0, -2.0]))
        np.testing.assert_allclose(g, [2.0, -4.0], atol=1e-8)


class TestSweep:
    def test_grid(self):
        rows = loss_sweep(0.3, 2.0, 64)
        assert len(rows) == 64
        th = np.array([r[0] for r in rows])
        assert th[0] == -math.pi / 2 and th[-1] < math.pi / 2
        np.testing.assert_allclose(np.diff(th), math.pi / 64, atol=1e-14)

    def test_target_row(self):
        rows = loss_sweep(-math.pi / 2 + 10 * math.pi / 100, 3.0, 100)
        _, tlf, omi = rows[10]
        assert tlf == pytest.approx(0.0, abs=1e-12)
        assert omi == pytest.approx(0.0, abs=1e-12)

    def test_boundary_target_minima_at_ends(self):
        rows = loss_sweep(-math.pi / 2, 5.0, 1000)
        tlf = np.array([r[1] for r in rows])
        assert np.argmin(tlf) == 0
        # second convergence point: the far end is a local minimum
        assert tlf[-1] < tlf[-2]
        # both ends sit one cell from a zero of |sin|: -pi/2 itself and +pi/2
        assert tlf[-1] == pytest.approx(tlf[1], abs=1e-12)
        assert tlf[2:-1].min() > tlf[-1]

    @pytest.mark.parametrize("ar", [2, 3, 5])
    def test_matches_iou_shape(self, ar):
        rows = loss_sweep(0.0, ar, 1000)
        arr = np.array(rows)
        mask = (arr[:, 0] > 0) & (arr[:, 0] <= math.pi / 2)
        rho = spearmanr(arr[mask, 1], arr[mask, 2]).statistic
        assert rho >= 0.99

    @pytest.mark.parametrize("ar", [2, 3, 5])
    def test_argmin_matches_iou(self, ar):
        rng = np.random.default_rng(ar)
        n = 720
        for theta_g in rng.uniform(-math.pi / 2, math.pi / 2, 5):
            arr = np.array(loss_sweep(theta_g, ar, n))
            assert abs(int(np.argmin(arr[:, 1])) - int(np.argmin(arr[:, 2]))) <= 1

    def test_validation(self):
        with pytest.raises(ValueError):
            loss_sweep(0.0, 2.0, 8)
        with pytest.raises(ValueError):
            loss_sweep(0.0, 0.5, 32)


def test_boundary_continuity_vs_raw_baseline():
    theta_g = -math.pi / 2
    t = unit(theta_g)
    for delta in (1e-1, 1e-2, 1e-3):
        hi = tlf_angle_loss(t, unit(math.pi / 2 - delta))
        lo = tlf_angle_loss(t, unit(-math.pi / 2 + delta))
        assert abs(hi - lo) < 1e-9
    gap = raw_angle_smooth_l1(math.pi / 2 - 1e-3, theta_g) - raw_angle_smooth_l1(-math.pi / 2 + 1e-3, theta_g)
    assert gap > 1.0
