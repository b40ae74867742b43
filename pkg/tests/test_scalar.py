import math
import warnings

import numpy as np
import pytest

from delay_consensus.scalar import (
    ScalarSystem,
    UnstableDelayWarning,
    admissible_delay,
    analyse,
    decay_rate,
    decay_rate_gain_form,
    decay_rates,
    optimal_delay,
    rate_gain_window,
)


def test_contract():
    with pytest.raises(ValueError):
        ScalarSystem(0.0, -1.0)
    with pytest.raises(ValueError):
        ScalarSystem(-1.0, 1.0)
    with pytest.raises(ValueError):
        ScalarSystem(1.0, -0.5)


def test_admissible_delay():
    assert admissible_delay(ScalarSystem(-1, 0)) == pytest.approx(math.pi / 2, rel=1e-15)
    assert admissible_delay(ScalarSystem(-2, 1)) == pytest.approx(math.acos(0.5) / math.sqrt(3), rel=1e-15)
    assert admissible_delay(ScalarSystem(-2, 1)) == pytest.approx(0.6046, abs=1e-4)
    assert admissible_delay(ScalarSystem(1, -2)) == math.inf
    assert admissible_delay(ScalarSystem(-1, -1)) == math.inf


def test_rate_at_zero_and_at_boundary():
    s = ScalarSystem(-1, 0)
    assert decay_rate(s, 0.0) == 1.0
    assert decay_rate(s, 1e-9) == pytest.approx(1.0, abs=1e-8)
    with pytest.warns(UnstableDelayWarning):
        r = decay_rate(s, math.pi / 2)
    assert abs(r) < 1e-12
    with pytest.warns(UnstableDelayWarning):
        assert decay_rate(s, 2.0) < 0
    with pytest.raises(ValueError):
        decay_rate(s, -0.1)


def test_optimal_delay_examples():
    tau, rho = optimal_delay(ScalarSystem(-1, 0))
    assert tau == pytest.approx(1 / math.e, rel=1e-15) and rho == pytest.approx(math.e, rel=1e-15)
    assert decay_rate(ScalarSystem(-1, 0), 1 / math.e) == pytest.approx(math.e, rel=1e-12)
    # W_0(1/(2e)) by Newton, independently of the library
    z = 1 / (2 * math.e)
    w = 0.1
    for _ in range(50):
        w -= (w * math.exp(w) - z) / (math.exp(w) * (1 + w))
    tau, rho = optimal_delay(ScalarSystem(-2, -1))
    assert tau == pytest.approx(w, rel=1e-13)
    assert rho == pytest.approx(1 + 1 / w, rel=1e-13)
    with pytest.raises(ValueError):
        optimal_delay(ScalarSystem(1, -2))


@pytest.mark.parametrize("a, b", [(-1, 0), (-2, -1), (-1, 0.5), (-3, 2), (-1, -4)])
def test_rate_at_optimum_equals_closed_form(a, b):
    s = ScalarSystem(a, b)
    tau, rho = optimal_delay(s)
    assert decay_rate(s, tau) == pytest.approx(rho, abs=1e-10)


def test_one_form_matches_the_other():
    rng = np.random.default_rng(4)
    for _ in range(300):
        a = rng.uniform(-5, 5)
        b = rng.uniform(-5, 5)
        if a == 0 or a + b >= 0:
            continue
        s = ScalarSystem(a, b)
        tb = admissible_delay(s)
        tau = rng.uniform(0, min(tb, 3.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnstableDelayWarning)
            assert decay_rate(s, tau) == pytest.approx(decay_rate_gain_form(s, tau), abs=1e-12 * (1 + abs(a)))


def test_vectorised_rates():
    taus = np.linspace(0, 1, 11)
    vec = decay_rates(-1.0, 0.0, taus)
    np.testing.assert_allclose(vec, [decay_rate(ScalarSystem(-1, 0), t) for t in taus], atol=1e-14)


def test_rate_gain_window():
    s = ScalarSystem(-1, 0)
    tt = rate_gain_window(s)
    assert 1 / math.e < tt < math.pi / 2
    assert decay_rate(s, tt) == pytest.approx(1.0, abs=1e-8)
    s2 = ScalarSystem(-2, -1)
    assert rate_gain_window(s2) < admissible_delay(s2)
    with pytest.raises(ValueError):
        rate_gain_window(ScalarSystem(1, -2))


@pytest.mark.parametrize("a, b", [(-1, 0), (-2, -1), (-1, 0.5)])
def test_window_and_monotone_shape(a, b):
    s = ScalarSystem(a, b)
    tau_star, _ = optimal_delay(s)
    tt = rate_gain_window(s)
    tb = admissible_delay(s)
    rho0 = s.rho0
    upper = tb if math.isfinite(tb) else 3 * tt
    grid = np.linspace(0, upper, 202)[1:-1]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnstableDelayWarning)
        r = np.array([decay_rate(s, t) for t in grid])
    assert 0 < tau_star < tt < tb
    up = grid < tau_star
    assert np.all(np.diff(r[up]) >= 0)
    assert np.all(np.diff(r[~up]) <= 0)
    inside = grid < tt * (1 - 1e-9)
    outside = grid > tt * (1 + 1e-9)
    assert np.all(r[inside] > rho0)
    assert np.all(r[outside] < rho0)


@pytest.mark.parametrize("a, b", [(1, -2), (0.5, -3), (2, -2.5)])
def test_positive_a_only_slows_down(a, b):
    s = ScalarSystem(a, b)
    r = decay_rates(a, b, np.linspace(0, 5, 200))
    assert r[0] == pytest.approx(s.rho0)
    assert np.all(np.diff(r) < 0)


def test_analyse_report():
    rep = analyse(ScalarSystem(-1, 0.5), taus=[0.1, 0.5, 5.0])
    assert 0 < rep.tau_star < rep.tau_tilde < rep.tau_bar
    assert rep.rho_at[5.0] < 0
    assert rep.rho_star == pytest.approx(decay_rate(ScalarSystem(-1, 0.5), rep.tau_star), abs=1e-10)
    rep2 = analyse(ScalarSystem(1, -2))
    assert rep2.tau_star is None and rep2.tau_bar == math.inf
