import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rendered_samples
from oracles import mse_bruteforce, psnr_bruteforce, ssim_bruteforce
from heavyrain.estimate import ParamEstimate
from heavyrain.metrics import (
    atm_light_error,
    evaluate,
    mse,
    physics_loss,
    psnr,
    ssim,
    streak_energy_fraction,
    streak_leakage,
)

rgb = st.tuples(*[st.floats(0, 1)] * 3)


def test_mse_examples(rng):
    a = rng.random((4, 4))
    assert mse(a, a) == 0.0
    assert mse(np.zeros((3, 3)), np.full((3, 3), 0.5)) == 0.25
    b = rng.random((4, 4))
    assert mse(a, b) == pytest.approx(mse_bruteforce(a, b), abs=1e-7)


def test_shape_mismatch():
    for fn in (mse, psnr, ssim):
        with pytest.raises(ValueError, match="shape"):
            fn(np.zeros((12, 12)), np.zeros((12, 13)))


@pytest.mark.parametrize("value,expected", [(0.5, 6.0206), (0.1, 20.0)])
def test_psnr_examples(value, expected):
    # a constant offset v gives mse = v^2
    assert psnr(np.zeros((4, 4)), np.full((4, 4), value)) == pytest.approx(expected, abs=1e-4)


def test_psnr_identical_is_inf(rng):
    a = rng.random((5, 5))
    assert psnr(a, a) == math.inf


def test_psnr_rejects_bad_peak():
    with pytest.raises(ValueError, match="peak"):
        psnr(np.zeros(3), np.ones(3), peak=0)


def test_psnr_decreases_with_mse(rng):
    a = rng.random((8, 8))
    noise = rng.standard_normal((8, 8))
    values = [psnr(a, a + s * noise) for s in (0.01, 0.05, 0.2)]
    assert values[0] > values[1] > values[2]


def test_ssim_identity(rng):
    a = rng.random((16, 16, 3))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    c = np.full((12, 12), 0.4)
    assert ssim(c, c) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_images():
    c1 = 1e-4
    expected = (2 * 0.3 * 0.7 + c1) / (0.3**2 + 0.7**2 + c1)
    assert expected == pytest.approx(0.7241, abs=1e-4)
    assert ssim(np.full((16, 16), 0.3), np.full((16, 16), 0.7)) == pytest.approx(expected, abs=1e-9)


def test_ssim_matches_sliding_window_oracle():
    rng = np.random.default_rng(99)
    for _ in range(5):
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert ssim(a, b) == pytest.approx(ssim_bruteforce(a, b), abs=1e-4)
        assert psnr(a, b) == pytest.approx(psnr_bruteforce(a, b), abs=1e-4)
        assert mse(a, b) == pytest.approx(mse_bruteforce(a, b), abs=1e-7)


def test_ssim_color_is_channel_average(rng):
    a, b = rng.random((14, 14, 3)), rng.random((14, 14, 3))
    expected = np.mean([ssim_bruteforce(a[:, :, c], b[:, :, c]) for c in range(3)])
    assert ssim(a, b) == pytest.approx(expected, abs=1e-6)


def test_ssim_symmetric(rng):
    a, b = rng.random((12, 12)), rng.random((12, 12))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_too_small():
    with pytest.raises(ValueError, match="smaller"):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_evaluate_bundles_metrics(rng):
    a, b = rng.random((12, 12, 3)), rng.random((12, 12, 3))
    r = evaluate(a, b)
    assert (r.psnr, r.ssim, r.mse) == (psnr(a, b), ssim(a, b), mse(a, b))


def test_atm_error_examples():
    assert atm_light_error([0.5] * 3, [0.5] * 3) == 0.0
    assert atm_light_error([0.5, 0.5, 0.5], [0.45, 0.55, 0.5]) == pytest.approx(0.1, abs=1e-12)
    assert atm_light_error(0.6, [0.5, 0.6, 0.7]) == pytest.approx(0.2, abs=1e-12)


@given(rgb, rgb, rgb)
def test_atm_error_triangle_inequality(a, b, c):
    assert atm_light_error(a, c) <= atm_light_error(a, b) + atm_light_error(b, c) + 1e-12


class TestPhysicsLoss:
    def setup_method(self):
        self.s = rendered_samples(1)[0]
        self.gt = ParamEstimate(self.s.streaks, self.s.trans_blur, self.s.atm)

    def test_ground_truth_is_zero(self):
        r = physics_loss(self.gt, self.s)
        assert (r.l_s, r.l_a, r.l_t, r.l_theta) == (0.0, 0.0, 0.0, 0.0)

    def test_default_weights_sum(self):
        est = ParamEstimate(self.s.streaks * 0.5, np.clip(self.s.trans_blur + 0.1, 0, 1), self.s.atm + 0.05)
        r = physics_loss(est, self.s)
        assert r.lambdas == (1.0, 1.0, 1.0)
        assert r.l_theta == r.l_s + r.l_a + r.l_t
        weighted = physics_loss(est, self.s, (2.0, 0.5, 3.0))
        assert weighted.l_theta == 2.0 * r.l_s + 0.5 * r.l_a + 3.0 * r.l_t

    def test_separable(self):
        est = ParamEstimate(self.s.streaks, self.s.trans_blur, self.s.atm * 0.9)
        r = physics_loss(est, self.s)
        assert r.l_s == 0.0 and r.l_t == 0.0
        assert r.l_a == pytest.approx(np.mean((0.1 * self.s.atm) ** 2))

    def test_shape_mismatch(self):
        est = ParamEstimate(np.zeros((4, 4, 1)), np.ones((4, 4)), [0.5] * 3)
        with pytest.raises(ValueError, match="shape"):
            physics_loss(est, self.s)


class TestLeakage:
    def test_constant_low_band(self, rng):
        assert streak_leakage(np.full((20, 20, 3), 0.4), rng.random((20, 20, 1))) == pytest.approx(0.0, abs=1e-12)

    def test_empty_mask(self, rng):
        assert streak_leakage(rng.random((20, 20, 3)), np.full((20, 20, 1), 0.05)) == 0.0

    def test_detects_streak_in_low_band(self):
        low = np.full((40, 40, 3), 0.3)
        s = np.zeros((40, 40, 1))
        s[5:35, 20] = 0.5
        clean = streak_leakage(low, s)
        low[5:35, 20] += 0.5
        assert streak_leakage(low, s) > clean + 0.1

    def test_energy_fraction_bounds(self, rng):
        rain = rng.random((10, 10, 3))
        s = rng.random((10, 10, 1))
        assert streak_energy_fraction(rain, rain, s) == pytest.approx(1.0)
        assert streak_energy_fraction(np.zeros_like(rain), rain, s) == 0.0
        assert streak_energy_fraction(rain, rain, np.zeros((10, 10, 1))) == 0.0
