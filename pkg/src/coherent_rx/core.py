"""Domain types: waveforms, hypothesis ensembles, posteriors, control policies.

Complex amplitudes are plain Python/numpy complex numbers in units of
sqrt(photons per unit time); a field S mixed with a control l produces
photon clicks at rate |S + l|**2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

PRIOR_SUM_TOL = 1e-9
POSTERIOR_SUM_TOL = 1e-10


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PiecewiseWaveform:
    """Complex field amplitude, constant on each of ``n_slices`` equal slices of [0, T)."""

    duration: float
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen_array(np.atleast_1d(self.amplitudes), complex)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("amplitudes must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        if not (np.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"duration must be positive, got {self.duration}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "duration", float(self.duration))

    @classmethod
    def constant(cls, amplitude: complex, duration: float, n_slices: int) -> "PiecewiseWaveform":
        if n_slices < 1:
            raise ValueError("n_slices must be >= 1")
        return cls(duration, np.full(int(n_slices), amplitude, dtype=complex))

    @property
    def n_slices(self) -> int:
        return self.amplitudes.size

    @property
    def dt(self) -> float:
        return self.duration / self.n_slices

    def __eq__(self, other):
        if not isinstance(other, PiecewiseWaveform):
            return NotImplemented
        return self.duration == other.duration and np.array_equal(self.amplitudes, other.amplitudes)

    __hash__ = None


def waveform_energy(w: PiecewiseWaveform) -> float:
    """Mean photon number sum_k |S_k|^2 * dt."""
    return float(np.sum(np.abs(w.amplitudes) ** 2) * w.dt)


@dataclass(frozen=True, eq=False)
class HypothesisEnsemble:
    waveforms: tuple
    priors: np.ndarray

    def __post_init__(self):
        waveforms = tuple(self.waveforms)
        if len(waveforms) < 1:
            raise ValueError("ensemble needs at least one waveform")
        first = waveforms[0]
        for w in waveforms[1:]:
            if w.n_slices != first.n_slices or w.duration != first.duration:
                raise ValueError("all waveforms must share the same slice grid")
        priors = np.asarray(self.priors, dtype=float)
        if priors.shape != (len(waveforms),):
            raise ValueError(f"expected {len(waveforms)} priors, got shape {priors.shape}")
        if np.any(priors < 0) or not np.all(np.isfinite(priors)):
            raise ValueError("priors must be finite and nonnegative")
        if abs(priors.sum() - 1.0) > PRIOR_SUM_TOL:
            raise ValueError(f"priors sum to {priors.sum():.12g}, not 1")
        object.__setattr__(self, "waveforms", waveforms)
        object.__setattr__(self, "priors", _frozen_array(priors / priors.sum(), float))

    @property
    def M(self) -> int:
        return len(self.waveforms)

    @property
    def n_slices(self) -> int:
        return self.waveforms[0].n_slices

    @property
    def duration(self) -> float:
        return self.waveforms[0].duration

    @property
    def dt(self) -> float:
        return self.waveforms[0].dt

    @property
    def amplitude_matrix(self) -> np.ndarray:
        """(M, n_slices) complex array of slice amplitudes."""
        return np.stack([w.amplitudes for w in self.waveforms])

    def is_real(self) -> bool:
        return bool(np.all(self.amplitude_matrix.imag == 0))

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.amplitude_matrix)))

    def __eq__(self, other):
        if not isinstance(other, HypothesisEnsemble):
            return NotImplemented
        return self.waveforms == other.waveforms and np.array_equal(self.priors, other.priors)

    __hash__ = None


def make_ensemble(amplitude_lists: Sequence[Sequence[complex]], priors: Sequence[float],
                  T: float) -> HypothesisEnsemble:
    """Build a validated ensemble from per-hypothesis slice amplitudes.

    Priors within 1e-9 of summing to one are renormalized; anything further
    off is rejected.
    """
    lists = [np.atleast_1d(np.asarray(a, dtype=complex)) for a in amplitude_lists]
    if len(lists) < 1:
        raise ValueError("need at least one hypothesis")
    lengths = {a.size for a in lists}
    if len(lengths) != 1:
        raise ValueError(f"amplitude lists have mismatched lengths {sorted(lengths)}")
    if len(priors) != len(lists):
        raise ValueError(f"{len(lists)} waveforms but {len(priors)} priors")
    return HypothesisEnsemble(tuple(PiecewiseWaveform(T, a) for a in lists), np.asarray(priors, float))


def constant_ensemble(amplitudes: Sequence[complex], priors: Sequence[float], T: float,
                      n_slices: int) -> HypothesisEnsemble:
    """Ensemble of constant-amplitude waveforms on ``n_slices`` slices."""
    return make_ensemble([[a] * int(n_slices) for a in amplitudes], priors, T)


@dataclass(frozen=True, eq=False)
class Posterior:
    probs: np.ndarray
    slice_index: int = 0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("posterior must be a finite nonnegative vector")
        if abs(probs.sum() - 1.0) > POSTERIOR_SUM_TOL:
            raise ValueError(f"posterior sums to {probs.sum():.12g}")
        if self.slice_index < 0:
            raise ValueError("slice_index must be nonnegative")
        object.__setattr__(self, "probs", _frozen_array(probs, float))

    @classmethod
    def from_ensemble(cls, ens: HypothesisEnsemble) -> "Posterior":
        return cls(ens.priors, 0)

    def argmax(self) -> int:
        # np.argmax returns the lowest index among ties
        return int(np.argmax(self.probs))

    def __eq__(self, other):
        if not isinstance(other, Posterior):
            return NotImplemented
        return self.slice_index == other.slice_index and np.array_equal(self.probs, other.probs)

    __hash__ = None


@dataclass(frozen=True)
class AlphaSchedule:
    """Piecewise-constant Renyi order over slice indices.

    ``values[j]`` applies to slices ``breaks[j-1] <= k < breaks[j]``; the last
    value holds for every slice past the final break.
    """

    values: tuple = (1.0,)
    breaks: tuple = ()

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        breaks = tuple(int(b) for b in self.breaks)
        if len(values) != len(breaks) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if any(v < 0 or np.isnan(v) for v in values):
            raise ValueError("alpha values must be >= 0")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])) or any(b <= 0 for b in breaks):
            raise ValueError("breakpoints must be positive and strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "breaks", breaks)

    @classmethod
    def constant(cls, alpha: float) -> "AlphaSchedule":
        return cls((alpha,), ())

    def __call__(self, k: int) -> float:
        return self.values[int(np.searchsorted(self.breaks, k, side="right"))]


@dataclass(frozen=True)
class SearchConfig:
    """Grid-plus-golden-section search over the control amplitude.

    The coarse grid spans ``[-w, w]`` with
    ``w = half_width_mult * (max|S_i| + |prior-weighted centroid|)``.
    """

    half_width_mult: float = 5.0
    grid_points: int = 2001
    grid_points_2d: int = 101
    refine_iters: int = 80
    tol: float = 1e-10

    def __post_init__(self):
        if self.grid_points < 3 or self.grid_points_2d < 3 or self.refine_iters < 0:
            raise ValueError("grid sizes must be >= 3 and refine_iters >= 0")
        if not (self.tol > 0 and self.half_width_mult > 0):
            raise ValueError("tol and half_width_mult must be positive")


@dataclass(frozen=True)
class ZeroControl:
    """Direct detection: the control is identically zero."""


@dataclass(frozen=True)
class DolinarBinary:
    """Flip-flop between the two precomputed binary controls on each click."""


@dataclass(frozen=True)
class RenyiIncremental:
    alpha_schedule: Union[AlphaSchedule, Callable[[int], float]] = field(default_factory=AlphaSchedule)
    search: SearchConfig = field(default_factory=SearchConfig)


@dataclass(frozen=True)
class PerSymbolMI:
    """Coded reception: per-symbol control maximizing the symbol-channel MI."""

    search: SearchConfig = field(default_factory=SearchConfig)


ControlPolicy = Union[ZeroControl, DolinarBinary, RenyiIncremental, PerSymbolMI]


def default_l_max(ens: HypothesisEnsemble) -> float:
    return 1e3 * ens.max_amplitude() + 1.0


@dataclass(frozen=True)
class DetectionParams:
    """Simulation knobs. ``l_max=None`` means ``1e3 * max|S| + 1`` for the ensemble."""

    l_max: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.l_max is not None and not self.l_max > 0:
            raise ValueError("l_max must be positive")

    def resolve_l_max(self, ens: HypothesisEnsemble) -> float:
        return default_l_max(ens) if self.l_max is None else float(self.l_max)


@dataclass(frozen=True)
class TrialRecord:
    true_hypothesis: int
    click_slices: tuple
    decision: int
    final_posterior: Posterior

    def __post_init__(self):
        clicks = tuple(int(k) for k in self.click_slices)
        if any(b <= a for a, b in zip(clicks, clicks[1:])) or any(k < 0 for k in clicks):
            raise ValueError("click_slices must be strictly increasing and nonnegative")
        object.__setattr__(self, "click_slices", clicks)

    @property
    def n_clicks(self) -> int:
        return len(self.click_slices)

    @property
    def error(self) -> bool:
        return self.decision != self.true_hypothesis


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial.

    Streams are keyed by ``SeedSequence(master_seed, spawn_key=(trial_index,))``
    so a trial's draws never depend on how trials are split across workers.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.PCG64(seq))
