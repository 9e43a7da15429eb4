"""Capacity and photon information efficiency (pie) on the pure-loss channel.

All quantities are in nats; divide by ln 2 for bits. E is the mean photon
number per channel use.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import optimize

from ._entropy import binary_entropy, xlogx
from .dolinar import ykl_error

BITS = np.log(2.0)


@dataclass(frozen=True)
class CapacityResult:
    energy: float
    value: float
    optimal_param: float | None = None

    @property
    def pie(self) -> float:
        return self.value / self.energy if self.energy > 0 else float("nan")

    @property
    def pie_bits(self) -> float:
        return self.pie / BITS


def holevo_capacity(E: float) -> float:
    """(1+E) log(1+E) - E log E."""
    if E < 0:
        raise ValueError("E must be nonnegative")
    return float((1.0 + E) * np.log1p(E) - xlogx(E))


def holevo_asymptotic(E: float) -> float:
    """Leading terms E log(1/E) + E of the Holevo capacity as E -> 0."""
    if not 0 < E < 1:
        raise ValueError("E must lie in (0, 1)")
    return float(E * np.log(1.0 / E) + E)


def ook_mutual_information(E: float, p: float) -> float:
    """I(X;Y) for on-off keying with on-probability p under direct detection.

    The 'on' amplitude carries E/p photons, so the click probability given
    'on' is 1 - exp(-E/p).
    """
    if E < 0:
        raise ValueError("E must be nonnegative")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if p == 0:
        if E > 0:
            raise ValueError("p = 0 cannot carry positive energy")
        return 0.0
    q = -np.expm1(-E / p)
    return max(0.0, float(binary_entropy(p * q) - p * binary_entropy(q)))


def heuristic_ook_probability(E: float) -> float:
    """(E/2) log(1/E): the small-E scaling of the optimal OOK duty cycle."""
    return 0.5 * E * np.log(1.0 / E)


def dd_capacity(E: float) -> CapacityResult:
    """Direct-detection capacity with OOK, maximizing over the duty cycle p in (E, 1]."""
    if not 0 < E < 1:
        raise ValueError("E must lie in (0, 1)")
    neg = lambda t: -ook_mutual_information(E, float(np.exp(t)))  # noqa: E731
    lo, hi = np.log(E), 0.0
    ts = np.linspace(lo, hi, 401)[1:]
    vals = np.array([neg(t) for t in ts])
    j = int(np.argmin(vals))
    a, b = ts[max(j - 1, 0)], ts[min(j + 1, len(ts) - 1)]
    if j == 0:
        a = lo
    res = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    t_best, v_best = (res.x, -res.fun) if -res.fun >= -vals[j] else (ts[j], -vals[j])
    return CapacityResult(E, float(v_best), float(np.exp(t_best)))


def dd_asymptotic(E: float) -> float:
    """E log(1/E) - E log log(1/E); the O(E) remainder is not modelled."""
    if not 0 < E < np.exp(-1):
        raise ValueError("E must lie in (0, 1/e)")
    return float(E * (np.log(1.0 / E) - np.log(np.log(1.0 / E))))


def coherent_pie_bound(E: float) -> float:
    """Leading terms log(1/E) - log log(1/E) of the coherent-processing pie bound.

    The true bound carries an additive O(1) constant that is not pinned down;
    callers comparing against it must allow explicit slack.
    """
    if not 0 < E < np.exp(-1):
        raise ValueError("E must lie in (0, 1/e)")
    return float(np.log(1.0 / E) - np.log(np.log(1.0 / E)))


def mi_upper_bound_binary(pi0: float, m: float) -> float:
    """H_B(pi0) - H_B(P_e*) with P_e* the minimum error for distance m."""
    return max(0.0, float(binary_entropy(pi0) - binary_entropy(ykl_error(pi0, m))))


def mi_rate_coefficient(pi0: float, lambda0: float, lambda1: float) -> float:
    """First-order slice MI per unit time: I(H;Y) ~ coefficient * dt."""
    if lambda0 < 0 or lambda1 < 0:
        raise ValueError("rates must be nonnegative")
    pi1 = 1.0 - pi0
    mix = pi0 * lambda0 + pi1 * lambda1
    return float(pi0 * xlogx(lambda0) + pi1 * xlogx(lambda1) - xlogx(mix))


def mi_rate_at_optimum(pi0: float, s0: float, s1: float) -> float:
    """The first-order coefficient evaluated at the optimal binary control."""
    pi1 = 1.0 - pi0
    return float((s0 - s1) ** 2 * pi0 * pi1 / (pi1 - pi0) * np.log(pi1 / pi0))


def binary_channel_mi(p0: float, t0: float, t1: float) -> float:
    """MI of the 2x2 channel with rows (t0, 1-t0), (t1, 1-t1) and input (p0, 1-p0)."""
    for v in (p0, t0, t1):
        if not 0 <= v <= 1:
            raise ValueError("arguments must lie in [0, 1]")
    out = binary_entropy(p0 * t0 + (1 - p0) * t1) - p0 * binary_entropy(t0) - (1 - p0) * binary_entropy(t1)
    return max(0.0, float(out))


_CAPACITIES: dict = {
    "holevo": holevo_capacity,
    "dd": lambda E: dd_capacity(E).value,
}


def solve_energy_for_pie(capacity_fn: Union[str, Callable[[float], float]], target_pie: float,
                         lo: float = 1e-12, hi: float = float(np.exp(-1)), rtol: float = 1e-6,
                         check_points: int = 41) -> float:
    """Mean photon number whose pie (nats/photon) equals ``target_pie``.

    Bisects on log E over [lo, hi] after checking that pie is decreasing on
    a log-spaced grid across the bracket.
    """
    fn = _CAPACITIES[capacity_fn] if isinstance(capacity_fn, str) else capacity_fn
    pie = lambda E: fn(E) / E  # noqa: E731
    grid = np.logspace(np.log10(lo), np.log10(hi), check_points)
    pies = np.array([pie(E) for E in grid])
    if np.any(np.diff(pies) >= 0):
        raise ValueError("pie is not monotone decreasing on the bracket")
    if not pies[-1] < target_pie < pies[0]:
        raise ValueError(f"target pie {target_pie} outside [{pies[-1]:.4g}, {pies[0]:.4g}]")
    t = optimize.bisect(lambda t: pie(np.exp(t)) - target_pie, np.log(lo), np.log(hi),
                        xtol=rtol * 1e-3, rtol=rtol * 1e-3, maxiter=400)
    return float(np.exp(t))
