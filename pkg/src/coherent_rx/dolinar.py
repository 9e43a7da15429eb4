"""Binary Dolinar receiver.

The receiver keeps a control that nulls (approximately) the currently
favoured hypothesis and flips to the other precomputed control at every
click. The commitment ratio g(t) = max posterior / min posterior grows
deterministically, so both candidate controls are tabulated up front.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (DetectionParams, HypothesisEnsemble, PiecewiseWaveform, Posterior,
                   TrialRecord, _frozen_array)
from .photodetect import sample_slice, slice_click_probability


def optimal_control_binary(s0, s1, pi0: float, pi1: float) -> complex:
    """Control maximizing the first-order slice mutual information.

    Uses the real parts of ``s0``/``s1``. Raises at ``pi0 == pi1`` where the
    optimum runs off to infinity.
    """
    if pi0 == pi1:
        raise ZeroDivisionError("optimal control is singular for equal priors; use a clamped control")
    s0, s1 = float(np.real(s0)), float(np.real(s1))
    return complex((s0 * pi0 - s1 * pi1) / (pi1 - pi0))


def ykl_error(pi0: float, m: float) -> float:
    """Minimum binary error probability for distance ``m = int |S0 - S1|^2 dt``."""
    if not 0.0 <= pi0 <= 1.0:
        raise ValueError("pi0 must lie in [0, 1]")
    if m < 0:
        raise ValueError("m must be nonnegative")
    pi1 = 1.0 - pi0
    return 0.5 * (1.0 - np.sqrt(max(0.0, 1.0 - 4.0 * pi0 * pi1 * np.exp(-m))))


def _g_closed(g0, m):
    em = np.exp(m)
    a = (1.0 + g0) / (2.0 * g0)
    return a * (1.0 + g0) * em - 1.0 + a * np.sqrt((1.0 + g0) ** 2 * em * em - 4.0 * g0 * em)


def g_closed_form(g0: float, m):
    """Commitment ratio after accumulated distance ``m``, starting from ``g0 > 1``."""
    if not g0 > 1:
        raise ValueError(f"g0 must exceed 1, got {g0}")
    if np.any(np.asarray(m) < 0):
        raise ValueError("m must be nonnegative")
    out = _g_closed(float(g0), np.asarray(m, dtype=float))
    return float(out) if out.ndim == 0 else out


def _g_rate(g):
    return g * (g + 1.0) / (g - 1.0)


def g_ode_step(g: float, h: float) -> float:
    """One classical RK4 step of dg/dm = g (g + 1) / (g - 1) with step ``h`` in m."""
    k1 = _g_rate(g)
    k2 = _g_rate(g + 0.5 * h * k1)
    k3 = _g_rate(g + 0.5 * h * k2)
    k4 = _g_rate(g + h * k3)
    return g + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


@dataclass(frozen=True, eq=False)
class CommitmentTrajectory:
    """g and cumulative distance m at the n_slices + 1 slice boundaries."""

    g: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        g = _frozen_array(self.g, float)
        m = _frozen_array(self.m, float)
        if g.shape != m.shape or g.ndim != 1:
            raise ValueError("g and m must be 1-D arrays of equal length")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "m", m)

    @property
    def g0(self) -> float:
        return float(self.g[0])

    def error_probability(self) -> np.ndarray:
        return 1.0 / (1.0 + self.g)


def _binary_geometry(ens: HypothesisEnsemble):
    """Project each slice onto the line through S0 and S1.

    Returns real coordinates r0, r1 along unit direction u, plus the offset a,
    such that S_i = r_i * u + a and a control x (real) maps to l = x u - a.
    """
    if ens.M != 2:
        raise ValueError("binary receiver needs exactly two hypotheses")
    amps = ens.amplitude_matrix
    s0, s1 = amps[0], amps[1]
    if ens.is_real():
        u = np.ones_like(s0)
    else:
        d = s1 - s0
        mag = np.abs(d)
        u = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    r0 = np.real(s0 * np.conj(u))
    r1 = np.real(s1 * np.conj(u))
    a = s0 - r0 * u
    return r0, r1, u, a


def cumulative_distance(ens: HypothesisEnsemble) -> np.ndarray:
    """m at slice boundaries: m[k] = sum_{j<k} |S0_j - S1_j|^2 dt."""
    amps = ens.amplitude_matrix
    steps = np.abs(amps[0] - amps[1]) ** 2 * ens.dt
    return np.concatenate([[0.0], np.cumsum(steps)])


def _initial_ratio(ens: HypothesisEnsemble) -> float:
    hi, lo = max(ens.priors), min(ens.priors)
    return np.inf if lo == 0 else hi / lo


def commitment_trajectory(ens: HypothesisEnsemble) -> CommitmentTrajectory:
    """Closed-form g on the slice grid (valid for g0 >= 1, including equal priors)."""
    m = cumulative_distance(ens)
    g0 = _initial_ratio(ens)
    g = np.full_like(m, np.inf) if np.isinf(g0) else _g_closed(g0, m)
    return CommitmentTrajectory(g, m)


def g_ode_integrate(ens: HypothesisEnsemble) -> CommitmentTrajectory:
    """Integrate the commitment ODE with one RK4 step per slice.

    The step in accumulated distance for slice k is |S0_k - S1_k|^2 dt,
    which is the same as stepping dg/dt = (S0 - S1)^2 g (g+1)/(g-1) in time.
    """
    m = cumulative_distance(ens)
    g0 = _initial_ratio(ens)
    if not g0 > 1 or np.isinf(g0):
        raise ValueError(f"ODE needs a finite initial ratio g0 > 1, got {g0}")
    g = np.empty_like(m)
    g[0] = g0
    for k, h in enumerate(np.diff(m)):
        g[k + 1] = g_ode_step(g[k], h)
        assert g[k + 1] >= g[k] > 1, "commitment ratio must stay above 1 and never decrease"
    return CommitmentTrajectory(g, m)


def _controls_real(r0, r1, g):
    """Real-axis controls (favour H0, favour H1) for commitment ratio g."""
    with np.errstate(divide="ignore", invalid="ignore"):
        l0 = (r1 - r0 * g) / (g - 1.0)
        l1 = (r0 - r1 * g) / (g - 1.0)
    # g -> inf nulls the favoured hypothesis exactly
    l0 = np.where(np.isinf(g), -r0, l0)
    l1 = np.where(np.isinf(g), -r1, l1)
    return l0, l1


def _clamp(l, l_max):
    l = np.asarray(l, dtype=complex)
    mag = np.abs(l)
    scale = np.where(mag > l_max, l_max / np.where(mag > 0, mag, 1.0), 1.0)
    return l * scale


def _physical_controls(ens: HypothesisEnsemble, traj: CommitmentTrajectory, l_max: float | None):
    r0, r1, u, a = _binary_geometry(ens)
    x0, x1 = _controls_real(r0, r1, traj.g[:-1])
    if l_max is not None:
        # bound the along-axis part first so inf never meets the complex product
        x0 = np.clip(x0, -l_max - np.abs(a), l_max + np.abs(a))
        x1 = np.clip(x1, -l_max - np.abs(a), l_max + np.abs(a))
    with np.errstate(invalid="ignore"):
        l0 = x0 * u - a
        l1 = x1 * u - a
    if l_max is not None:
        l0, l1 = _clamp(l0, l_max), _clamp(l1, l_max)
    return l0, l1


def control_waveforms(traj: CommitmentTrajectory, ens: HypothesisEnsemble,
                      l_max: float | None = None):
    """The two flip-flop controls as waveforms: (favour H0, favour H1).

    The active control is ``l0`` while the click count is even (for
    pi0 >= pi1) and ``l1`` while it is odd. Equal priors make the first slice
    singular; pass ``l_max`` to clamp.
    """
    if len(traj.g) != ens.n_slices + 1:
        raise ValueError("trajectory does not match the ensemble slice grid")
    l0, l1 = _physical_controls(ens, traj, l_max)
    if not (np.all(np.isfinite(l0)) and np.all(np.isfinite(l1))):
        raise ValueError("controls diverge (g = 1 on the grid); supply l_max")
    return PiecewiseWaveform(ens.duration, l0), PiecewiseWaveform(ens.duration, l1)


@dataclass(frozen=True, eq=False)
class _DolinarTables:
    traj: CommitmentTrajectory
    controls: np.ndarray      # (2, n): control while favouring hypothesis f
    click_probs: np.ndarray   # (2, 2, n): [favoured f, true h, slice k]
    favoured0: int


def dolinar_tables(ens: HypothesisEnsemble, params: DetectionParams) -> _DolinarTables:
    traj = commitment_trajectory(ens)
    l_max = params.resolve_l_max(ens)
    l0, l1 = _physical_controls(ens, traj, l_max)
    controls = np.stack([l0, l1])
    amps = ens.amplitude_matrix
    probs = slice_click_probability(amps[None, :, :], controls[:, None, :], ens.dt)
    favoured0 = 0 if ens.priors[0] >= ens.priors[1] else 1
    return _DolinarTables(traj, _frozen_array(controls, complex), _frozen_array(probs, float), favoured0)


def _final_posterior(tables: _DolinarTables, favoured: int, n_slices: int) -> Posterior:
    g = tables.traj.g[-1]
    probs = np.empty(2)
    if np.isinf(g):
        probs[favoured], probs[1 - favoured] = 1.0, 0.0
    else:
        probs[favoured], probs[1 - favoured] = g / (1.0 + g), 1.0 / (1.0 + g)
    return Posterior(probs, n_slices)


def simulate_dolinar_trial(ens: HypothesisEnsemble, params: DetectionParams, true_h: int,
                           rng: np.random.Generator, tables: _DolinarTables | None = None) -> TrialRecord:
    """One receiver run, slice by slice, one uniform draw per slice."""
    if true_h not in (0, 1):
        raise ValueError("true_h must be 0 or 1")
    tables = dolinar_tables(ens, params) if tables is None else tables
    favoured = tables.favoured0
    clicks = []
    for k in range(ens.n_slices):
        if sample_slice(tables.click_probs[favoured, true_h, k], rng):
            clicks.append(k)
            favoured ^= 1
    return TrialRecord(true_h, tuple(clicks), favoured, _final_posterior(tables, favoured, ens.n_slices))


def simulate_dolinar_batch(ens: HypothesisEnsemble, params: DetectionParams,
                           true_h: Sequence[int], rngs: Sequence[np.random.Generator],
                           chunk: int = 1000) -> list:
    """Vectorized equivalent of calling :func:`simulate_dolinar_trial` per rng.

    Each generator supplies the same ``n_slices`` uniforms the scalar loop
    would draw, so records match trial for trial.
    """
    true_h = np.asarray(true_h, dtype=int)
    if true_h.shape != (len(rngs),):
        raise ValueError("need one rng per trial")
    tables = dolinar_tables(ens, params)
    n = ens.n_slices
    records = []
    for start in range(0, len(rngs), chunk):
        hs = true_h[start:start + chunk]
        u = np.stack([r.random(n) for r in rngs[start:start + chunk]])
        c_fav0 = u < tables.click_probs[0, hs, :]
        c_fav1 = u < tables.click_probs[1, hs, :]
        del u
        favoured = np.full(hs.size, tables.favoured0, dtype=bool)
        clicked = np.empty_like(c_fav0)
        for k in range(n):
            ck = np.where(favoured, c_fav1[:, k], c_fav0[:, k])
            clicked[:, k] = ck
            favoured ^= ck
        for j in range(hs.size):
            f = int(favoured[j])
            records.append(TrialRecord(int(hs[j]), tuple(np.flatnonzero(clicked[j])), f,
                                       _final_posterior(tables, f, n)))
    return records
