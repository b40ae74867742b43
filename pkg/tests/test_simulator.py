import math
import warnings

import numpy as np
import pytest

from delay_consensus.graph import Graph, complete_graph, laplacian, example_graph, spectrum
from delay_consensus.modal import modal_closed_form
from delay_consensus.network import ConsensusParams, convergence_rate, optimal_network_delay
from delay_consensus.scalar import UnstableDelayWarning
from delay_consensus.signals import (
    DEFAULT_AMPLITUDES,
    DEFAULT_BIASES,
    RampReference,
    SinusoidReference,
    StaticReference,
    ZOHSinusoidReference,
    fiedler_ramp,
)
from delay_consensus.simulator import (
    InsufficientDataError,
    Trajectory,
    control_effort,
    disagreement,
    estimate_decay_rate,
    fit_decay_rate,
    simulate,
    simulate_derivative_free,
    tracking_error,
    write_trajectory_csv,
    zero_input_simulate,
)

G = example_graph()
X0 = ZOHSinusoidReference(seed=42).value(0.0)


def test_grid_divides_delay():
    tr = zero_input_simulate(G, ConsensusParams(1, 1, 0.1), X0, 0.5, dt_max=0.003)
    assert tr.delay_steps == 34
    assert tr.dt * tr.delay_steps == pytest.approx(0.1, rel=1e-15)
    t, hist = tr.history
    assert t[0] == pytest.approx(-0.1) and t[-1] == 0
    assert np.all(hist[:-1] == 0) and np.array_equal(hist[-1], X0)


def test_input_validation():
    with pytest.raises(ValueError):
        simulate(G, ConsensusParams(1, 1, 0.1), StaticReference(X0), 1.0, dt_max=0.0)
    with pytest.raises(ValueError):
        simulate(G, ConsensusParams(1, 1, 0.1), StaticReference(X0), -1.0)
    with pytest.raises(ValueError):
        simulate(G, ConsensusParams(1, 1, 0.1), StaticReference([1.0, 2.0]), 1.0)
    with pytest.raises(ValueError):
        StaticReference([1.0, np.nan])


def test_unstable_delay_warns_and_flags():
    with pytest.warns(UnstableDelayWarning):
        simulate(G, ConsensusParams(1, 1.5, 0.2), StaticReference(X0), 1.0)
    tr = zero_input_simulate(G, ConsensusParams(1, 1.5, 0.2), X0, 3.0)
    assert tr.divergent
    assert not zero_input_simulate(G, ConsensusParams(1, 1.5, 0.1), X0, 1.0).divergent


def test_k_zero_static_reference_rate():
    tr = zero_input_simulate(G, ConsensusParams(1, 0, 0.0), X0, 12.0, dt_max=1e-3)
    assert np.allclose(tr.states[-1], X0.mean(), atol=1e-9)
    assert estimate_decay_rate(tr) == pytest.approx(3.0, rel=0.05)


def test_mean_is_conserved():
    for k in (-0.5, 0.5, 1.5):
        tr = zero_input_simulate(G, ConsensusParams(1, k, 0.1), X0, 5.0)
        assert np.abs(tr.states.mean(axis=1) - X0.mean()).max() <= 1e-9


def test_consensus_start_stays_put():
    x0 = np.full(5, 2.5)
    for k in (0.0, 1.0, 1.5):
        tr = zero_input_simulate(G, ConsensusParams(1, k, 0.1), x0, 1.0)
        assert np.abs(tr.states - 2.5).max() <= 1e-14
        assert control_effort(tr) == 0.0


def test_convergence_to_initial_mean(example):
    _, spec = example
    p = ConsensusParams(1, 1, 0.2)
    rho = convergence_rate(spec, p).rho_tau
    tr = zero_input_simulate(G, p, X0, 20 / rho, dt_max=2e-3)
    assert np.abs(tr.states[-1] - X0.mean()).max() <= 1e-6


def test_half_split_is_stable_for_long_delay():
    # the rate here is only about 5e-3, so check the envelope shrinks
    tr = zero_input_simulate(G, ConsensusParams(1, 0.5, 5.0), X0, 300.0, dt_max=0.05)
    assert not tr.divergent
    d = disagreement(tr)
    assert d[tr.times > 295].max() < 0.5 * d[0]


def test_static_reference_forms_identical():
    p = ConsensusParams(1, 1.5, 0.1)
    a = simulate(G, p, StaticReference(X0), 2.0)
    b = simulate_derivative_free(G, p, StaticReference(X0), 2.0)
    assert np.abs(a.states - b.states).max() <= 1e-9


def test_derivative_free_initialisation():
    ref = SinusoidReference(DEFAULT_AMPLITUDES, DEFAULT_BIASES, 2.0, 0.3)
    tr = simulate_derivative_free(G, ConsensusParams(1, 1, 0.1), ref, 0.5)
    np.testing.assert_array_equal(tr.states[0], ref.value(0.0))


@pytest.mark.parametrize("ref", [
    SinusoidReference(DEFAULT_AMPLITUDES, DEFAULT_BIASES, 2.0, 0.3),
    ZOHSinusoidReference(seed=42),
])
def test_two_forms_agree_with_moving_reference(ref):
    for k in (0.0, 1.0, 1.5):
        p = ConsensusParams(1, k, 0.1)
        a = simulate(G, p, ref, 5.0)
        b = simulate_derivative_free(G, p, ref, 5.0)
        assert np.abs(a.states - b.states).max() <= 1e-6


def test_zoh_refinement_changes_little():
    ref = ZOHSinusoidReference(seed=42)
    p = ConsensusParams(1, 1.5, 0.1)
    a = simulate(G, p, ref, 5.0, dt_max=1e-3)
    b = simulate_derivative_free(G, p, ref, 5.0, dt_max=5e-4)
    assert np.abs(a.states - b.states[::2]).max() <= 1e-5


def test_fourth_order_convergence():
    p = ConsensusParams(1, 1.5, 0.1)
    finals = [zero_input_simulate(G, p, X0, 2.0, dt).states[-1] for dt in (0.02, 0.01, 0.005)]
    e1 = np.abs(finals[0] - finals[1]).max()
    e2 = np.abs(finals[1] - finals[2]).max()
    assert e1 / e2 == pytest.approx(16, rel=0.15)


@pytest.mark.parametrize("k", [0.25, 0.5, 1.0, 1.5])
def test_matches_modal_closed_form(example, k):
    _, spec = example
    p = ConsensusParams(1, k, 0.1)
    tr = zero_input_simulate(G, p, X0, 0.2, dt_max=1e-3)
    z = tr.states @ spec.transform
    for i in range(1, 5):
        cf = np.array([modal_closed_form(spec.eigenvalues[i], p, z[0, i], t) for t in tr.times])
        assert np.abs(cf - z[:, i]).max() <= 1e-6 * abs(z[0, i])


@pytest.mark.parametrize("k", [0.2, 0.5, 0.8])
def test_peak_sits_in_first_two_delays(k):
    # a 2-node graph is a single scalar mode with both coefficients negative
    g = Graph.from_edges(2, [(0, 1)])
    p = ConsensusParams(1, k, 0.3)
    tr = zero_input_simulate(g, p, [1.0, -1.0], 6.0, dt_max=1e-3)
    d = np.abs(tr.states[:, 0] - tr.states[:, 1])
    early = tr.times <= 2 * p.tau + 1e-12
    assert abs(d.max() - d[early].max()) <= 1e-9


def test_effort_ordering_split_factors():
    base = control_effort(zero_input_simulate(G, ConsensusParams(1, 0, 0.1), X0, 5.0))
    for k in (0.25, 0.5, 1.0):
        assert control_effort(zero_input_simulate(G, ConsensusParams(1, k, 0.1), X0, 5.0)) <= base + 1e-9
    big = control_effort(zero_input_simulate(G, ConsensusParams(1, 1.5, 0.1), X0, 5.0))
    assert big >= math.exp(0.5 * 3 * 0.1) * base


def test_effort_on_random_graphs(random_graphs):
    rng = np.random.default_rng(17)
    for g, spec in random_graphs[:4]:
        x0 = rng.normal(size=g.n)
        base = control_effort(zero_input_simulate(g, ConsensusParams(1, 0, 0.05), x0, 3.0, dt_max=2e-3))
        for k in (0.5, 1.0):
            e = control_effort(zero_input_simulate(g, ConsensusParams(1, k, 0.05), x0, 3.0, dt_max=2e-3))
            assert e <= base + 1e-9
        tau = 0.5 * convergence_rate(spec, ConsensusParams(1, 1.5, 0)).tau_bar
        e = control_effort(zero_input_simulate(g, ConsensusParams(1, 1.5, tau), x0, 3.0, dt_max=2e-3))
        assert e >= math.exp(0.5 * spec.lambda2 * tau) * base


def test_tracking_error_basics():
    ref = StaticReference(X0)
    tr = simulate(G, ConsensusParams(1, 1, 0.1), ref, 8.0)
    e = tracking_error(tr)
    assert e[0] == pytest.approx(np.max(np.abs(X0 - X0.mean())), abs=1e-15)
    assert e[-1] < 1e-9
    zoh = ZOHSinusoidReference(seed=3)
    tr = simulate(G, ConsensusParams(1, 0.5, 0.1), zoh, 1.0)
    r0 = zoh.value(0)
    assert tracking_error(tr)[0] == pytest.approx(np.max(np.abs(r0 - r0.mean())), abs=1e-15)


@pytest.mark.parametrize("k", [-0.5, 0.0, 0.5, 1.0, 1.5])
def test_tracking_ceiling_across_delays(example, k):
    _, spec = example
    ref = fiedler_ramp(spec, speed=1.0, drift=0.2)
    bound = ref.gamma / spec.lambda2
    tb = convergence_rate(spec, ConsensusParams(1, k, 0)).tau_bar
    top = 0.9 * (tb if math.isfinite(tb) else 0.3)
    for tau in np.linspace(0, top, 4):
        tr = simulate(G, ConsensusParams(1, k, float(tau)), ref, 14.0, dt_max=2e-3)
        e = tracking_error(tr)
        assert e[tr.times > 10].max() <= 1.02 * bound


def test_tracking_bound_with_smooth_sinusoid(example):
    _, spec = example
    ref = SinusoidReference(DEFAULT_AMPLITUDES, DEFAULT_BIASES, 1.5, 0.0)
    bound = ref.gamma / spec.lambda2
    for k in (0.0, 0.5):
        tr = simulate(G, ConsensusParams(1, k, 0.1), ref, 12.0)
        assert tracking_error(tr)[tr.times > 6].max() <= bound


@pytest.mark.parametrize("k, tau", [(0.5, 0.05), (0.5, 0.15), (1.0, 0.1), (1.5, 0.06)])
def test_empirical_rate_matches_analytic(example, k, tau):
    _, spec = example
    p = ConsensusParams(1, k, tau)
    tr = zero_input_simulate(G, p, X0, 12.0)
    assert estimate_decay_rate(tr) == pytest.approx(convergence_rate(spec, p).rho_tau, rel=0.05)


def test_empirical_rate_at_optimal_delay(example):
    _, spec = example
    opt = optimal_network_delay(spec, 1, 1.0)
    tr = zero_input_simulate(G, ConsensusParams(1, 1.0, opt.tau_star), X0, 8.0)
    assert estimate_decay_rate(tr) == pytest.approx(opt.rho_star, rel=0.05)


def test_fit_pure_exponential():
    t = np.linspace(0, 10, 2001)
    assert fit_decay_rate(t, 3.0 * np.exp(-2 * t)) == pytest.approx(2.0, abs=1e-3)
    states = np.outer(np.exp(-2 * t), [1.0, -1.0])
    tr = Trajectory(dt=t[1], times=t, states=states, controls=np.zeros_like(states),
                    params=ConsensusParams(1, 0, 0))
    assert estimate_decay_rate(tr) == pytest.approx(2.0, abs=1e-3)


def test_fit_oscillating_decay():
    t = np.linspace(0, 10, 20001)
    e = np.exp(-1.5 * t) * np.abs(np.cos(4 * t)) + 1e-300
    assert fit_decay_rate(t, e) == pytest.approx(1.5, rel=1e-3)


def test_fit_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit_decay_rate([0.0, 1.0, 2.0], [1.0, 0.5, 0.2])
    with pytest.raises(InsufficientDataError):
        fit_decay_rate(np.arange(5.0), np.zeros(5))
    t = np.linspace(0, 1, 200)
    with pytest.raises(InsufficientDataError):
        fit_decay_rate(t, np.exp(-t) * (2 + np.cos(2 * np.pi * 1.2 * t)))


def test_csv_export(tmp_path):
    ref = ZOHSinusoidReference(seed=42)
    tr = simulate(G, ConsensusParams(1, 1, 0.1), ref, 0.2)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(tr, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x_1,x_2,x_3,x_4,x_5,u_1,u_2,u_3,u_4,u_5,r_avg,err"
    assert len(lines) == tr.times.size + 1
    row = np.array(lines[50].split(","), dtype=float)
    np.testing.assert_allclose(row[1:6], tr.states[49], rtol=1e-14)
    np.testing.assert_allclose(row[6:11], tr.controls[49], rtol=1e-14, atol=1e-300)
    assert row[-1] == pytest.approx(tracking_error(tr)[49], rel=1e-14)
