"""Coded transmission: message-posterior tracking with per-symbol control.

One slice per symbol: the control is fixed for the whole symbol and the
detector reports click / no click. Alphabet amplitudes are in
sqrt(photons per symbol) when ``dt = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (DetectionParams, PerSymbolMI, SearchConfig, ZeroControl, _frozen_array)
from .photodetect import ImpossibleObservation, posterior_step, sample_slice, slice_channel
from .renyi import _optimize_rows

MAX_MESSAGES = 2 ** 16
MAX_BLOCKLENGTH = 2 ** 14


@dataclass(frozen=True, eq=False)
class Codebook:
    alphabet: np.ndarray
    design_dist: np.ndarray
    composition: np.ndarray
    table: np.ndarray

    @property
    def M(self) -> int:
        return self.table.shape[0]

    @property
    def N(self) -> int:
        return self.table.shape[1]

    @property
    def realized_dist(self) -> np.ndarray:
        return self.composition / self.M

    def mean_energy(self) -> float:
        """Average photons per symbol, identical for every position."""
        return float(self.realized_dist @ np.abs(self.alphabet) ** 2)

    def codeword(self, m: int) -> np.ndarray:
        return self.alphabet[self.table[m]]


def integer_composition(M: int, dist) -> np.ndarray:
    """Closest integer counts summing to M (largest remainder, ties to lower index)."""
    dist = np.asarray(dist, dtype=float)
    raw = M * dist
    counts = np.floor(raw).astype(int)
    short = M - counts.sum()
    order = np.lexsort((np.arange(dist.size), -(raw - counts)))
    counts[order[:short]] += 1
    return counts


def build_codebook(M: int, N: int, alphabet, design_dist, rng: np.random.Generator,
                   max_energy: float | None = None) -> Codebook:
    """Constant-composition random codebook.

    Every column holds the same integer composition of ``design_dist``,
    independently permuted, so each position sees exactly the realized
    input distribution under a uniform message.
    """
    if not (1 <= M <= MAX_MESSAGES and 1 <= N <= MAX_BLOCKLENGTH):
        raise ValueError(f"need 1 <= M <= {MAX_MESSAGES} and 1 <= N <= {MAX_BLOCKLENGTH}")
    alphabet = np.asarray(alphabet, dtype=complex)
    dist = np.asarray(design_dist, dtype=float)
    if dist.shape != alphabet.shape or np.any(dist < 0) or abs(dist.sum() - 1) > 1e-9:
        raise ValueError("design_dist must be a probability vector matching the alphabet")
    counts = integer_composition(M, dist)
    if np.any((dist > 0) & (counts == 0)):
        raise ValueError(f"M = {M} is too small to represent design_dist {dist.tolist()}")
    column = np.repeat(np.arange(alphabet.size), counts)
    table = np.empty((M, N), dtype=np.int32)
    for i in range(N):
        table[:, i] = rng.permutation(column)
    cb = Codebook(_frozen_array(alphabet, complex), _frozen_array(dist, float),
                  _frozen_array(counts, int), _frozen_array(table, np.int32))
    if max_energy is not None and cb.mean_energy() > max_energy + 1e-12:
        raise ValueError(f"codebook energy {cb.mean_energy():.6g} exceeds {max_energy}")
    return cb


def ook_codebook(M: int, N: int, energy: float, p: float, rng: np.random.Generator) -> Codebook:
    """OOK codebook whose on-amplitude spends exactly ``energy`` per symbol on average.

    The on-probability is the realized integer composition closest to ``p``.
    """
    counts = integer_composition(M, [1 - p, p])
    p_real = counts[1] / M
    if p_real == 0:
        raise ValueError(f"M = {M} cannot represent on-probability {p}")
    return build_codebook(M, N, [0.0, np.sqrt(energy / p_real)], [1 - p_real, p_real], rng,
                          max_energy=energy)


@dataclass(frozen=True, eq=False)
class MessagePosterior:
    """Message posterior stored as normalized log-probabilities."""

    log_probs: np.ndarray
    symbol_index: int = 0

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=float)
        if np.all(np.isneginf(lp)):
            raise ImpossibleObservation("message posterior has no support")
        object.__setattr__(self, "log_probs", _frozen_array(lp - logsumexp(lp), float))

    @classmethod
    def uniform(cls, M: int) -> "MessagePosterior":
        return cls(np.zeros(M), 0)

    @classmethod
    def from_probs(cls, probs, symbol_index: int = 0) -> "MessagePosterior":
        probs = np.asarray(probs, dtype=float)
        with np.errstate(divide="ignore"):
            return cls(np.log(probs), symbol_index)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def map_message(self) -> int:
        return int(np.argmax(self.log_probs))


def effective_symbol_prior(mp: MessagePosterior, cb: Codebook, i: int) -> np.ndarray:
    """P'(x) = sum of posterior mass over messages whose i-th symbol is x."""
    if not 0 <= i < cb.N:
        raise IndexError(f"symbol index {i} outside [0, {cb.N})")
    w = np.bincount(cb.table[:, i], weights=mp.probs, minlength=cb.alphabet.size)
    return w / w.sum()


def update_message_posterior(mp: MessagePosterior, cb: Codebook, i: int, prior_X, posterior_X) -> MessagePosterior:
    """Scale each message by P''(f_i(m)) / P'(f_i(m))."""
    prior_X = np.asarray(prior_X, dtype=float)
    posterior_X = np.asarray(posterior_X, dtype=float)
    sym = cb.table[:, i]
    live = ~np.isneginf(mp.log_probs)
    if np.any(prior_X[sym[live]] <= 0):
        raise ZeroDivisionError("a message with positive posterior maps to a zero-prior symbol")
    with np.errstate(divide="ignore"):
        log_ratio = np.log(posterior_X) - np.log(np.where(prior_X > 0, prior_X, 1.0))
    return MessagePosterior(mp.log_probs + log_ratio[sym], i + 1)


def choose_symbol_control(prior_X, alphabet, dt: float, cfg: SearchConfig | None = None,
                          l_max: float | None = None) -> complex:
    """Control maximizing I(X; Y) of the |alphabet|-input, click/no-click symbol channel."""
    cfg = SearchConfig() if cfg is None else cfg
    if not dt > 0:
        raise ValueError("dt must be positive")
    prior_X = np.asarray(prior_X, dtype=float)
    return complex(_optimize_rows(np.asarray(alphabet, complex), prior_X[None, :], dt, 1.0, cfg, l_max)[0])


@dataclass(frozen=True, eq=False)
class CodedReception:
    decoded: int
    info_trace: np.ndarray
    clicks: np.ndarray
    controls: np.ndarray
    posterior: MessagePosterior


def run_coded_reception(cb: Codebook, true_message: int, policy, params: DetectionParams | None,
                        rng: np.random.Generator, dt: float = 1.0,
                        initial: MessagePosterior | None = None) -> CodedReception:
    """Receive one codeword symbol by symbol and decode by MAP at the end.

    ``info_trace[i]`` is the realized information density
    log P''(x_i) / P'(x_i) of the transmitted symbol.
    """
    if not isinstance(policy, (ZeroControl, PerSymbolMI)):
        raise TypeError("coded reception supports ZeroControl or PerSymbolMI")
    l_max = None if params is None else params.l_max
    mp = MessagePosterior.uniform(cb.M) if initial is None else initial
    trace = np.empty(cb.N)
    clicks = np.zeros(cb.N, dtype=np.int8)
    controls = np.zeros(cb.N, dtype=complex)
    for i in range(cb.N):
        x_true = cb.table[true_message, i]
        prior_X = effective_symbol_prior(mp, cb, i)
        if isinstance(policy, PerSymbolMI):
            controls[i] = choose_symbol_control(prior_X, cb.alphabet, dt, policy.search, l_max)
        q = slice_channel(cb.alphabet, controls[i], dt)
        clicks[i] = sample_slice(q[x_true], rng)
        posterior_X = posterior_step(prior_X, q, clicks[i])
        if prior_X[x_true] <= 0:
            raise ImpossibleObservation("transmitted message was excluded by the receiver")
        trace[i] = np.log(posterior_X[x_true]) - np.log(prior_X[x_true])
        mp = update_message_posterior(mp, cb, i, prior_X, posterior_X)
    return CodedReception(mp.map_message(), trace, clicks, controls, mp)
