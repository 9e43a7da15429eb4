"""Receivers as scikit-learn classifiers.

A receiver maps a click record (one 0/1 column per slice) to a hypothesis.
It is model-based: ``fit`` only validates parameters and tabulates controls,
so ``X``/``y`` are optional there. ``simulate`` draws labelled click records
from the physical model.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import (AlphaSchedule, DetectionParams, RenyiIncremental, SearchConfig,
                   constant_ensemble, make_ensemble, trial_rng)
from .dolinar import dolinar_tables, simulate_dolinar_batch
from .renyi import replay_posteriors, simulate_mary_batch


def build_ensemble(amplitudes, priors, duration: float, n_slices: int):
    """Constant amplitudes (1-D) or explicit slice amplitudes (2-D) to an ensemble."""
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.ndim == 1:
        return constant_ensemble(amps, priors, duration, n_slices)
    if amps.ndim == 2:
        return make_ensemble(amps, priors, duration)
    raise ValueError("amplitudes must be 1-D (constant) or 2-D (per slice)")


def draw_hypotheses(priors, rngs) -> np.ndarray:
    """One prior draw per trial generator, taken before any slice uniforms."""
    cdf = np.cumsum(priors)
    u = np.array([r.random() for r in rngs])
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


class _Receiver(ClassifierMixin, BaseEstimator):
    def _check_clicks(self, X) -> np.ndarray:
        check_is_fitted(self, "ensemble_")
        X = check_array(X, dtype=np.int8)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} slice columns, got {X.shape[1]}")
        if np.any((X != 0) & (X != 1)):
            raise ValueError("click records must be 0/1")
        return X

    def _fit_ensemble(self):
        self.ensemble_ = build_ensemble(self.amplitudes, self.priors, self.duration, self.n_slices)
        self.classes_ = np.arange(self.ensemble_.M)
        self.n_features_in_ = self.ensemble_.n_slices
        self.l_max_ = DetectionParams(self.l_max).resolve_l_max(self.ensemble_)

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def simulate(self, n_trials: int, random_state: int = 0):
        """Labelled click records ``(X, y)`` with per-trial seeded generators."""
        check_is_fitted(self, "ensemble_")
        rngs = [trial_rng(random_state, i) for i in range(int(n_trials))]
        y = draw_hypotheses(self.ensemble_.priors, rngs)
        records = self._simulate(y, rngs)
        X = np.zeros((len(records), self.n_features_in_), dtype=np.int8)
        for i, r in enumerate(records):
            X[i, list(r.click_slices)] = 1
        return X, y


class DolinarReceiver(_Receiver):
    """Binary flip-flop receiver.

    Parameters
    ----------
    amplitudes : two constant amplitudes, or a (2, n_slices) array
    priors : prior probabilities of the two hypotheses
    duration : observation time T
    n_slices : slice count (ignored for 2-D amplitudes)
    l_max : control clamp; None uses 1e3 * max|S| + 1
    """

    def __init__(self, amplitudes=(0.0, 1.0), priors=(0.5, 0.5), duration=1.0, n_slices=1000, l_max=None):
        self.amplitudes = amplitudes
        self.priors = priors
        self.duration = duration
        self.n_slices = n_slices
        self.l_max = l_max

    def fit(self, X=None, y=None):
        self._fit_ensemble()
        if self.ensemble_.M != 2:
            raise ValueError("DolinarReceiver needs exactly two hypotheses")
        self.tables_ = dolinar_tables(self.ensemble_, DetectionParams(self.l_max))
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_clicks(X)
        g = self.tables_.traj.g[-1]
        p_fav = 1.0 if np.isinf(g) else g / (1.0 + g)
        favoured = (self.tables_.favoured0 + X.sum(axis=1)) % 2
        out = np.empty((X.shape[0], 2))
        out[np.arange(len(X)), favoured] = p_fav
        out[np.arange(len(X)), 1 - favoured] = 1.0 - p_fav
        return out

    def _simulate(self, y, rngs):
        return simulate_dolinar_batch(self.ensemble_, DetectionParams(self.l_max), y, rngs)


class RenyiReceiver(_Receiver):
    """M-ary receiver choosing each slice control by expected Renyi entropy.

    ``alpha`` is a float or an :class:`AlphaSchedule`.
    """

    def __init__(self, amplitudes=(5.0, -6.0, 3.0), priors=(0.8, 0.1, 0.1), duration=1.0,
                 n_slices=10, alpha=1.0, l_max=None, search=None):
        self.amplitudes = amplitudes
        self.priors = priors
        self.duration = duration
        self.n_slices = n_slices
        self.alpha = alpha
        self.l_max = l_max
        self.search = search

    def fit(self, X=None, y=None):
        self._fit_ensemble()
        schedule = self.alpha if isinstance(self.alpha, AlphaSchedule) else AlphaSchedule.constant(self.alpha)
        self.policy_ = RenyiIncremental(schedule, self.search or SearchConfig())
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_clicks(X)
        return replay_posteriors(self.ensemble_, self.policy_, self.l_max_, X)

    def _simulate(self, y, rngs):
        return simulate_mary_batch(self.ensemble_, self.policy_, DetectionParams(self.l_max), y, rngs)
