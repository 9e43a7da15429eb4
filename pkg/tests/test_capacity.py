import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coherent_rx import (binary_channel_mi, coherent_pie_bound, dd_asymptotic, dd_capacity,
                         heuristic_ook_probability, holevo_asymptotic, holevo_capacity,
                         mi_rate_at_optimum, mi_rate_coefficient, mi_upper_bound_binary,
                         ook_mutual_information, solve_energy_for_pie)
from coherent_rx._entropy import binary_entropy
from coherent_rx.capacity import BITS

ENERGIES = [1e-5, 1e-4, 1e-3, 1e-2]
# leading-terms bound minus the exact DD pie stays within this many nats/photon here
PIE_SLACK = 0.5


def test_holevo_values():
    assert holevo_capacity(0.0) == 0.0
    assert holevo_capacity(1.0) == pytest.approx(2 * math.log(2), rel=1e-15)
    assert holevo_capacity(0.0027) / 0.0027 / BITS == pytest.approx(10.0, abs=0.1)
    with pytest.raises(ValueError):
        holevo_capacity(-1e-3)


def test_holevo_asymptotic():
    assert holevo_asymptotic(1e-4) == pytest.approx(1e-4 * (math.log(1e4) + 1), rel=1e-14)
    assert holevo_asymptotic(1e-4) == pytest.approx(1.021034e-3, rel=1e-6)
    assert holevo_asymptotic(1e-2) == pytest.approx(0.056052, abs=1e-6)
    gaps = [abs(holevo_capacity(E) - holevo_asymptotic(E)) / E for E in 10.0 ** -np.arange(2, 9)]
    assert np.all(np.diff(gaps) < 0)


def test_ook_mi_values():
    assert ook_mutual_information(0.3, 1.0) == pytest.approx(0.0, abs=1e-15)
    E = 1e-4
    p = heuristic_ook_probability(E)
    assert p == pytest.approx(4.60517e-4, rel=1e-5)
    assert ook_mutual_information(E, p) == pytest.approx(7.0e-4, rel=2e-3)
    assert ook_mutual_information(E, p) / E / BITS == pytest.approx(10.1, abs=0.01)
    assert ook_mutual_information(0.5, 0.5) == pytest.approx(0.295, abs=5e-4)
    with pytest.raises(ValueError):
        ook_mutual_information(0.1, 0.0)


@given(st.floats(1e-6, 0.3), st.floats(0.0, 1.0))
def test_ook_mi_range(E, u):
    p = E + (1 - E) * u
    v = ook_mutual_information(E, p)
    assert 0 <= v <= binary_entropy(p) + 1e-15


@given(st.floats(1e-8, 0.3))
def test_ook_mi_is_unimodal_in_p(E):
    ps = np.geomspace(E, 1.0, 400)
    v = np.array([ook_mutual_information(E, p) for p in ps])
    k = int(np.argmax(v))
    assert np.all(np.diff(v[:k + 1]) >= -1e-15)
    assert np.all(np.diff(v[k:]) <= 1e-15)


def test_ook_mi_is_not_concave_past_the_peak():
    # the maximizer therefore searches a grid first instead of trusting concavity
    E = 0.25
    a, b = E, 1.0
    mid = ook_mutual_information(E, 0.5 * (a + b))
    assert mid < 0.5 * (ook_mutual_information(E, a) + ook_mutual_information(E, b))


def test_dd_capacity_at_anchor():
    r = dd_capacity(1e-4)
    assert 9.5 <= r.pie_bits <= 10.5
    assert r.value >= ook_mutual_information(1e-4, heuristic_ook_probability(1e-4))


@pytest.mark.parametrize("E", ENERGIES + [1e-8])
def test_dd_capacity_is_a_maximum(E):
    r = dd_capacity(E)
    ps = np.geomspace(E * 1.0001, 1.0, 3000)
    assert r.value >= max(ook_mutual_information(E, p) for p in ps) - 1e-15
    assert E < r.optimal_param <= 1


def test_duty_cycle_approaches_heuristic_scaling():
    energies = 10.0 ** -np.array([3, 4, 6, 8, 12, 20])
    ratios = [dd_capacity(E).optimal_param / heuristic_ook_probability(E) for E in energies]
    assert np.all(np.diff(ratios) > 0)
    assert 0.9 <= ratios[-1] <= 1.1
    assert all(r < 1 for r in ratios)


def test_dd_capacity_matches_leading_terms_up_to_order_e():
    for E in 10.0 ** -np.arange(3, 16):
        assert abs(dd_capacity(E).value - dd_asymptotic(E)) <= E


@pytest.mark.parametrize("E, expected", [(1e-4, 6.98988), (1e-2, 3.07799)])
def test_coherent_pie_bound(E, expected):
    assert coherent_pie_bound(E) == pytest.approx(expected, abs=2e-3)
    assert coherent_pie_bound(E) * E == pytest.approx(dd_asymptotic(E), rel=1e-14)


def test_coherent_pie_bound_domain():
    with pytest.raises(ValueError):
        coherent_pie_bound(0.5)


@pytest.mark.parametrize("E", ENERGIES)
def test_dominance_chain(E):
    dd = dd_capacity(E).value
    assert dd <= E * coherent_pie_bound(E) + PIE_SLACK * E
    assert dd < holevo_capacity(E)


def test_mi_upper_bound_binary():
    assert mi_upper_bound_binary(0.5, 0.0) == 0.0
    assert mi_upper_bound_binary(0.5, 60.0) == pytest.approx(math.log(2), abs=1e-12)
    assert mi_upper_bound_binary(2 / 3, math.log(2)) == pytest.approx(0.25522, abs=5e-5)


def test_mi_rate_coefficient():
    assert mi_rate_coefficient(0.3, 2.5, 2.5) == pytest.approx(0.0, abs=1e-15)
    v = mi_rate_coefficient(2 / 3, 4.0, 16.0)
    assert v == pytest.approx(8 / 9 * 3 * math.log(2), rel=1e-14)
    assert v == pytest.approx(1.84839, abs=1e-5)
    assert mi_rate_at_optimum(2 / 3, 1.0, -1.0) == pytest.approx(v, rel=1e-14)


@given(st.floats(0, 1), st.floats(0, 50), st.floats(0, 50))
def test_mi_rate_coefficient_nonnegative(pi0, l0, l1):
    assert mi_rate_coefficient(pi0, l0, l1) >= -1e-12 * max(1.0, l0, l1)


def test_binary_channel_mi_examples():
    assert binary_channel_mi(0.4, 0.3, 0.3) == pytest.approx(0.0, abs=1e-15)
    assert binary_channel_mi(0.5, 1.0, 0.0) == pytest.approx(math.log(2), rel=1e-15)
    vals = [binary_channel_mi(0.3, t0, 0.2) for t0 in (0.6, 0.4, 0.25)]
    assert vals[0] > vals[1] > vals[2]


@given(st.floats(0, 0.99), st.floats(0, 1))
def test_binary_channel_mi_monotone_in_t0(t1, p0):
    grid = np.linspace(t1, 1.0, 50)
    vals = np.array([binary_channel_mi(p0, t0, t1) for t0 in grid])
    assert np.all(np.diff(vals) >= -1e-12)


def test_solve_energy_for_pie():
    E_h = solve_energy_for_pie("holevo", 10 * BITS)
    assert E_h == pytest.approx(0.0027, rel=0.05)
    assert holevo_capacity(E_h) / E_h == pytest.approx(10 * BITS, rel=1e-6)
    E_d = solve_energy_for_pie("dd", 10 * BITS)
    assert dd_capacity(E_d).pie == pytest.approx(10 * BITS, rel=1e-6)
    assert E_d < E_h


def test_solve_energy_for_pie_errors():
    with pytest.raises(ValueError):
        solve_energy_for_pie("holevo", 0.01)
    with pytest.raises(ValueError):
        solve_energy_for_pie(lambda E: E * E, 1.0)
