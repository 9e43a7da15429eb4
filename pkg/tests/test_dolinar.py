import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coherent_rx import (DetectionParams, commitment_trajectory, constant_ensemble, control_waveforms,
                         g_closed_form, g_ode_integrate, make_ensemble, optimal_control_binary,
                         simulate_dolinar_batch, simulate_dolinar_trial, trial_rng, ykl_error)
from coherent_rx.dolinar import dolinar_tables


def test_optimal_control_example():
    l = optimal_control_binary(1.0, -1.0, 2 / 3, 1 / 3)
    assert l == pytest.approx(-3.0, abs=1e-15)
    lam0, lam1 = (1 + l.real) ** 2, (-1 + l.real) ** 2
    assert (lam0, lam1) == pytest.approx((4.0, 16.0))
    assert 2 / 3 * math.sqrt(lam0) == pytest.approx(4 / 3)
    assert 1 / 3 * math.sqrt(lam1) == pytest.approx(4 / 3)


def test_optimal_control_on_off_vanishing_prior():
    assert abs(optimal_control_binary(0.0, 2.0, 1 - 1e-12, 1e-12)) < 1e-11


def test_optimal_control_equal_priors_is_singular():
    with pytest.raises(ZeroDivisionError):
        optimal_control_binary(0.0, 1.0, 0.5, 0.5)


@given(st.floats(0.02, 0.98).filter(lambda p: abs(p - 0.5) > 0.02),
       st.floats(-5, 5), st.floats(-5, 5))
def test_balance_relation(pi0, s0, s1):
    pi1 = 1 - pi0
    l = optimal_control_binary(s0, s1, pi0, pi1).real
    assert abs(pi0 * abs(s0 + l) - pi1 * abs(s1 + l)) <= 1e-12 * max(1.0, abs(l))


@pytest.mark.parametrize("pi0, m, expected", [
    (0.5, 0.0, 0.5),
    (1.0, 3.0, 0.0),
    (0.5, math.log(4 / 3), 0.25),
    (0.5, 1.0, 0.5 * (1 - math.sqrt(1 - math.exp(-1)))),
])
def test_ykl_error(pi0, m, expected):
    assert ykl_error(pi0, m) == pytest.approx(expected, abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 20), st.floats(0, 5))
def test_ykl_error_nonincreasing_in_m(pi0, m, dm):
    assert ykl_error(pi0, m + dm) <= ykl_error(pi0, m) + 1e-15
    assert 0 <= ykl_error(pi0, m) <= 0.5


def test_g_closed_form_examples():
    assert g_closed_form(2.0, 0.0) == pytest.approx(2.0, rel=1e-14)
    assert g_closed_form(2.0, math.log(2)) == pytest.approx(3.5 + 0.75 * math.sqrt(20), rel=1e-14)
    assert 1 / (1 + g_closed_form(2.0, math.log(2))) == pytest.approx(0.127322, abs=1e-6)
    assert 1 / (1 + g_closed_form(3.0, 10.0)) == pytest.approx(ykl_error(0.75, 10.0), abs=1e-12)
    with pytest.raises(ValueError):
        g_closed_form(1.0, 1.0)


@given(st.floats(1.001, 50), st.floats(0, 15))
def test_g_closed_form_matches_ykl(g0, m):
    assert 1 / (1 + g_closed_form(g0, m)) == pytest.approx(ykl_error(g0 / (1 + g0), m), abs=1e-12)
    assert g_closed_form(g0, m) >= g0 * (1 - 1e-14)


def _ode_vs_closed(g0, m_max=10.0, n=100_000):
    pi0 = g0 / (1 + g0)
    T = 1.0
    s = math.sqrt(m_max / T)
    ens = constant_ensemble([0.0, s], [pi0, 1 - pi0], T, n)
    return g_ode_integrate(ens), commitment_trajectory(ens)


@pytest.mark.parametrize("g0", [1.1, 2.0, 10.0])
def test_ode_matches_closed_form(g0):
    ode, closed = _ode_vs_closed(g0)
    assert np.max(np.abs(ode.g / closed.g - 1)) <= 1e-8
    assert np.all(np.diff(ode.g) > 0)


def test_ode_constant_when_waveforms_coincide():
    ens = constant_ensemble([1.0, 1.0], [2 / 3, 1 / 3], 1.0, 50)
    assert np.allclose(g_ode_integrate(ens).g, 2.0, rtol=1e-15)


def test_ode_rejects_equal_priors():
    with pytest.raises(ValueError):
        g_ode_integrate(constant_ensemble([0.0, 1.0], [0.5, 0.5], 1.0, 10))


def test_control_waveforms_ook():
    S = 2.0
    ens = constant_ensemble([0.0, S], [0.7, 0.3], 1.0, 20)
    traj = commitment_trajectory(ens)
    l0, l1 = control_waveforms(traj, ens)
    g = traj.g[:-1]
    assert np.allclose(l0.amplitudes, S / (g - 1), rtol=1e-12)
    assert np.allclose(l1.amplitudes, -S * g / (g - 1), rtol=1e-12)


def test_control_waveforms_first_slice_matches_lemma():
    ens = constant_ensemble([1.0, -1.0], [2 / 3, 1 / 3], 1.0, 10)
    l0, _ = control_waveforms(commitment_trajectory(ens), ens)
    assert l0.amplitudes[0] == pytest.approx(optimal_control_binary(1.0, -1.0, 2 / 3, 1 / 3))


def test_control_waveforms_null_at_large_g():
    ens = constant_ensemble([0.5, -1.5], [1 - 1e-13, 1e-13], 1.0, 5)
    l0, l1 = control_waveforms(commitment_trajectory(ens), ens)
    assert np.allclose(l0.amplitudes, -0.5, atol=1e-9)
    assert np.allclose(l1.amplitudes, 1.5, atol=1e-9)
    certain = constant_ensemble([0.5, -1.5], [1.0, 0.0], 1.0, 5)
    l0, l1 = control_waveforms(commitment_trajectory(certain), certain)
    assert np.allclose(l0.amplitudes, -0.5) and np.allclose(l1.amplitudes, 1.5)


def test_equal_priors_need_clamp():
    ens = constant_ensemble([0.0, 1.0], [0.5, 0.5], 1.0, 10)
    with pytest.raises(ValueError):
        control_waveforms(commitment_trajectory(ens), ens)
    l0, _ = control_waveforms(commitment_trajectory(ens), ens, l_max=50.0)
    assert abs(l0.amplitudes[0]) == pytest.approx(50.0)


def test_complex_ensemble_projects_to_real_line():
    rot = np.exp(0.7j)
    real = constant_ensemble([0.3, -1.2], [0.6, 0.4], 1.0, 30)
    cplx = constant_ensemble([0.3 * rot, -1.2 * rot], [0.6, 0.4], 1.0, 30)
    tr, tc = dolinar_tables(real, DetectionParams()), dolinar_tables(cplx, DetectionParams())
    assert np.allclose(tr.click_probs, tc.click_probs, atol=1e-12)


def test_identical_waveforms_decide_prior_argmax():
    ens = constant_ensemble([1.0, 1.0], [0.3, 0.7], 1.0, 100)
    rngs = [trial_rng(0, i) for i in range(400)]
    recs = simulate_dolinar_batch(ens, DetectionParams(), [0] * 400, rngs)
    assert all(r.decision == 1 for r in recs)


def test_trial_is_deterministic():
    ens = constant_ensemble([0.0, 1.0], [0.6, 0.4], 1.0, 500)
    a = simulate_dolinar_trial(ens, DetectionParams(), 1, trial_rng(3, 9))
    b = simulate_dolinar_trial(ens, DetectionParams(), 1, trial_rng(3, 9))
    assert a == b


@pytest.mark.parametrize("priors", [[0.6, 0.4], [0.3, 0.7], [0.5, 0.5]])
def test_batch_matches_scalar(priors):
    ens = make_ensemble([np.linspace(0, 1, 200), np.linspace(1, -1, 200)], priors, 2.0)
    params = DetectionParams()
    hs = [i % 2 for i in range(150)]
    batch = simulate_dolinar_batch(ens, params, hs, [trial_rng(11, i) for i in range(150)], chunk=64)
    scalar = [simulate_dolinar_trial(ens, params, h, trial_rng(11, i)) for i, h in enumerate(hs)]
    assert batch == scalar
    assert any(r.n_clicks > 1 for r in batch)


def test_trajectory_is_click_independent():
    ens = constant_ensemble([0.0, 1.5], [0.7, 0.3], 1.0, 300)
    tables = dolinar_tables(ens, DetectionParams())
    g = tables.traj.g.copy()
    recs = [simulate_dolinar_trial(ens, DetectionParams(), i % 2, trial_rng(1, i), tables) for i in range(50)]
    assert len({r.click_slices for r in recs}) > 1
    assert np.array_equal(tables.traj.g, g)
    assert not tables.traj.g.flags.writeable


def test_decision_is_parity():
    ens = constant_ensemble([0.0, 1.0], [0.8, 0.2], 1.0, 300)
    for i in range(100):
        r = simulate_dolinar_trial(ens, DetectionParams(), i % 2, trial_rng(2, i))
        assert r.decision == r.n_clicks % 2


def test_small_monte_carlo_near_ykl():
    ens = constant_ensemble([0.0, 1.0], [0.7, 0.3], 1.0, 1000)
    n = 20000
    rngs = [trial_rng(21, i) for i in range(n)]
    hs = (np.array([r.random() for r in rngs]) >= 0.7).astype(int)
    err = np.mean([r.error for r in simulate_dolinar_batch(ens, DetectionParams(), hs, rngs)])
    ref = ykl_error(0.7, 1.0)
    assert abs(err - ref) <= 4 * math.sqrt(ref * (1 - ref) / n)
