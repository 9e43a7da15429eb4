"""Slice-discretized photodetection: click probabilities, sampling, Bayes updates.

Within a slice of width dt the detector reports only whether at least one
photon arrived, so each slice is a binary-output channel with
P(click | S) = 1 - exp(-|S + l|^2 dt).
"""
from __future__ import annotations

import numpy as np

from ._entropy import binary_entropy
from .core import HypothesisEnsemble, Posterior


class ImpossibleObservation(ValueError):
    """Every hypothesis assigns zero probability to the observed outcome."""


def slice_click_probability(s, l, dt):
    """Probability of at least one click in a slice; broadcasts over arrays."""
    if not np.all(np.asarray(dt) > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    rate = np.abs(np.asarray(s) + np.asarray(l)) ** 2
    p = -np.expm1(-rate * dt)
    return float(p) if np.ndim(p) == 0 else p


def slice_channel(amplitudes, l, dt) -> np.ndarray:
    """Click probabilities for every hypothesis amplitude under control ``l``."""
    return np.atleast_1d(slice_click_probability(np.asarray(amplitudes), l, dt))


def sample_slice(p: float, rng: np.random.Generator) -> int:
    """Bernoulli(p) click using exactly one uniform draw from ``rng``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"click probability {p} outside [0, 1]")
    return int(rng.random() < p)


def likelihoods(click_probs, clicked) -> np.ndarray:
    click_probs = np.asarray(click_probs, dtype=float)
    return click_probs if clicked else 1.0 - click_probs


def bayes_update(post: Posterior, ens: HypothesisEnsemble, slice_k: int, l, clicked: int) -> Posterior:
    if len(post.probs) != ens.M:
        raise ValueError("posterior and ensemble disagree on the number of hypotheses")
    if not 0 <= slice_k < ens.n_slices:
        raise IndexError(f"slice {slice_k} outside [0, {ens.n_slices})")
    q = slice_channel(ens.amplitude_matrix[:, slice_k], l, ens.dt)
    probs = posterior_step(post.probs, q, clicked)
    return Posterior(probs, post.slice_index + 1)


def posterior_step(probs, click_probs, clicked) -> np.ndarray:
    """Unnormalized-then-renormalized Bayes step on a probability vector."""
    joint = np.asarray(probs, dtype=float) * likelihoods(click_probs, clicked)
    total = joint.sum()
    if total <= 0:
        raise ImpossibleObservation("observation has zero probability under every hypothesis")
    return joint / total


def slice_mutual_information(priors, click_probs):
    """Exact I(H; Y) in nats for the M-input, binary-output slice channel.

    ``priors`` and ``click_probs`` broadcast along the last axis.
    """
    priors = np.asarray(priors, dtype=float)
    click_probs = np.asarray(click_probs, dtype=float)
    py1 = np.sum(priors * click_probs, axis=-1)
    return binary_entropy(py1) - np.sum(priors * binary_entropy(click_probs), axis=-1)
