import math

import numpy as np
import pytest

from delay_consensus.gain import (
    bisect,
    critical_x,
    gain,
    gain_array,
    landmarks,
    peak_x,
    unity_crossing_x,
)
from delay_consensus.lambertw import lambert_w


def test_gain_at_zero_is_one():
    for gamma in (-5.0, -1.0, 0.0, 0.3, 2.0):
        assert gain(gamma, 0.0) == 1.0
    np.testing.assert_array_equal(gain_array([0.0, 2.0], 0.0), [1.0, 1.0])


def test_gain_array_matches_scalar():
    x = np.linspace(-3, 3, 61)
    for gamma in (-2.0, 0.0, 0.7):
        np.testing.assert_allclose(gain_array(gamma, x), [gain(gamma, v) for v in x], rtol=0, atol=1e-15)


def test_gain_rejects_non_finite():
    with pytest.raises(ValueError):
        gain(math.nan, 1.0)


def test_peak_values():
    assert peak_x(0.0) == (-math.exp(-1), math.e)
    assert gain(0.0, -math.exp(-1)) == pytest.approx(math.e, rel=1e-14)
    # independent check of W_0(-1/(3e)) by Newton on w e^w = z
    z = -1 / (3 * math.e)
    w = -0.1
    for _ in range(50):
        w -= (w * math.exp(w) - z) / (math.exp(w) * (1 + w))
    x_star, g_max = peak_x(1 / 3)
    assert x_star == pytest.approx(3 * w, rel=1e-13)
    assert g_max == pytest.approx(-(1 / 3) / w, rel=1e-13)
    assert x_star == pytest.approx(-0.42368, abs=1e-5)
    assert g_max == pytest.approx(2.3603, abs=1e-4)
    assert gain(1 / 3, x_star) == pytest.approx(g_max, rel=1e-12)


def test_peak_is_continuous_at_gamma_zero():
    for eps in (1e-6, -1e-6):
        x, g = peak_x(eps)
        assert x == pytest.approx(-math.exp(-1), abs=1e-5)
        assert g == pytest.approx(math.e, abs=1e-5)


def test_peak_domain():
    with pytest.raises(ValueError):
        peak_x(1.0)
    with pytest.raises(ValueError):
        unity_crossing_x(1.5)


def test_critical_x():
    assert critical_x(0.0) == -math.pi / 2
    assert critical_x(0.5) == pytest.approx(-math.acos(0.5) / math.sqrt(0.75), rel=1e-15)
    assert critical_x(0.5) == pytest.approx(-1.2092, abs=1e-4)
    for gamma in (-1.0, -3.0, 1.0, 2.0):
        assert critical_x(gamma) == -math.inf


def test_critical_x_is_stability_boundary():
    # at x_bar the rightmost root sits on the imaginary axis, just inside it is stable
    for gamma in (-0.8, 0.0, 0.5, 0.9):
        xb = critical_x(gamma)
        assert gain(gamma, xb) == pytest.approx(gamma, abs=1e-9)
        assert gain(gamma, xb * (1 - 1e-6)) > gamma


@pytest.mark.parametrize("gamma", [-2.0, -1.0, 0.0, 1 / 3, 0.5, 0.9])
def test_landmark_ordering(gamma):
    lm = landmarks(gamma)
    assert lm.x_bar < lm.x_tilde < lm.x_star < 0
    assert lm.g_max > 1
    assert abs(gain(gamma, lm.x_tilde) - 1) <= 1e-10


def test_unity_crossing_at_gamma_zero():
    xt = unity_crossing_x(0.0)
    assert -math.pi / 2 < xt < -math.exp(-1)
    assert lambert_w(xt).real == pytest.approx(xt, abs=1e-11)
    assert gain(0.0, xt / 2) > 1


def test_unity_crossing_bracket_for_half():
    xt = unity_crossing_x(0.5)
    assert critical_x(0.5) < xt < peak_x(0.5)[0]


@pytest.mark.parametrize("gamma", [-2.0, -1.0, 0.0, 0.5, 2.0])
def test_limit_at_origin(gamma):
    for x in (1e-9, -1e-9):
        assert abs(gain(gamma, x) - 1) < 1e-6


@pytest.mark.parametrize("gamma", [1.5, 2.0, 5.0])
def test_above_one_gain_below_gamma_and_increasing(gamma):
    x = np.geomspace(1e-3, 10, 400)
    g = gain_array(gamma, x)
    assert np.all(g < gamma)
    assert np.all(np.diff(g) > 0)


@pytest.mark.parametrize("gamma", [-3.0, -1.0, 0.0, 0.5, 0.9])
def test_gain_exceeds_gamma_in_stable_range(gamma):
    xb = critical_x(gamma)
    lo = xb if math.isfinite(xb) else -50.0
    x = np.linspace(lo, 0, 2001)[1:-1]
    assert np.all(gain_array(gamma, x) > gamma)


@pytest.mark.parametrize("gamma", [-1.0, 0.0, 1 / 3, 0.9])
def test_unimodal_shape(gamma):
    x_star, _ = peak_x(gamma)
    xb = critical_x(gamma)
    lo = xb if math.isfinite(xb) else 20 * x_star
    left = gain_array(gamma, np.linspace(lo, x_star, 1500)[1:])
    right = gain_array(gamma, np.linspace(x_star, 0, 1500))
    assert np.all(np.diff(left) >= -1e-12)
    assert np.all(np.diff(right) <= 1e-12)


@pytest.mark.parametrize("gamma", [-2.0, 0.0, 0.5, 0.9])
def test_gain_above_one_exactly_right_of_crossing(gamma):
    xt = unity_crossing_x(gamma)
    xb = critical_x(gamma)
    lo = xb if math.isfinite(xb) else 10 * xt
    x = np.linspace(lo, 0, 4001)[1:-1]
    g = gain_array(gamma, x)
    away = np.abs(x - xt) > 1e-9
    assert np.all((g > 1)[away] == (x > xt)[away])


def test_bisect():
    assert bisect(lambda x: x * x - 2, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        bisect(lambda x: x * x + 1, -1, 1)
