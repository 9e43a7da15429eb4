"""M-ary discrimination with slice-by-slice Renyi-entropy control.

At each slice the receiver picks the control minimizing the expected
Renyi-alpha entropy of its posterior after seeing click / no click. alpha = 1
is mutual-information maximization; large alpha favours posteriors with a
single dominant entry.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ._entropy import shannon_entropy
from .core import (DetectionParams, HypothesisEnsemble, Posterior, RenyiIncremental,
                   SearchConfig, TrialRecord)
from .photodetect import ImpossibleObservation, bayes_update, sample_slice, slice_click_probability

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_TIE_RTOL = 64 * np.finfo(float).eps  # exact ties only, up to rounding
_MAX_CELLS = 2_000_000


def _renyi_rows(P: np.ndarray, alpha: float) -> np.ndarray:
    """Renyi entropy along the last axis of a nonnegative, normalized array."""
    P = np.asarray(P, dtype=float)
    if alpha == 1:
        return shannon_entropy(P)
    if np.isinf(alpha):
        return -np.log(P.max(axis=-1))
    if alpha == 0:
        return np.log(np.count_nonzero(P > 0, axis=-1).astype(float))
    pmax = P.max(axis=-1, keepdims=True)
    ratio = P / pmax
    return (alpha * np.log(pmax[..., 0]) + np.log(np.sum(ratio ** alpha, axis=-1))) / (1.0 - alpha)


def renyi_entropy(p, alpha: float) -> float:
    """Renyi entropy of order ``alpha`` in nats.

    alpha = 1 and alpha = inf are evaluated as Shannon and min-entropy
    directly rather than as limits.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p must be a normalized probability vector")
    if not alpha >= 0:
        raise ValueError("alpha must be >= 0")
    return max(0.0, float(_renyi_rows(p, alpha)))


def _expected_renyi(amps: np.ndarray, P: np.ndarray, l: np.ndarray, dt: float, alpha: float) -> np.ndarray:
    """Expected posterior Renyi entropy for rows of P (U, M) and controls l (U, G)."""
    U, G = l.shape
    out = np.empty((U, G))
    step = max(1, _MAX_CELLS // max(1, G * amps.size))
    for s in range(0, U, step):
        Ps = P[s:s + step, None, :]
        q = -np.expm1(-np.abs(amps[None, None, :] + l[s:s + step, :, None]) ** 2 * dt)
        j1 = Ps * q
        j0 = Ps * (1.0 - q)
        p1 = j1.sum(axis=-1)
        p0 = j0.sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            h1 = _renyi_rows(j1 / p1[..., None], alpha)
            h0 = _renyi_rows(j0 / p0[..., None], alpha)
        h1 = np.where(p1 > 0, h1, 0.0)
        h0 = np.where(p0 > 0, h0, 0.0)
        out[s:s + step] = p0 * h0 + p1 * h1
    return out


def expected_posterior_renyi(ens: HypothesisEnsemble, post: Posterior, l, dt: float, alpha: float) -> float:
    """sum_y P(y) H_alpha(P(H | y)) for the slice at ``post.slice_index``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k = post.slice_index
    if not 0 <= k < ens.n_slices:
        raise IndexError(f"posterior slice {k} outside the ensemble grid")
    amps = ens.amplitude_matrix[:, k]
    return float(_expected_renyi(amps, post.probs[None, :], np.array([[complex(l)]]), dt, alpha)[0, 0])


def _pick_tie(f: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Column of the per-row minimum, breaking near-ties toward smaller |candidate|."""
    fmin = f.min(axis=1, keepdims=True)
    near = f <= fmin + _TIE_RTOL * np.maximum(1.0, np.abs(fmin))
    mag = np.where(near, np.abs(cand), np.inf)
    return np.argmin(mag, axis=1)


def _golden_rows(fun, lo: np.ndarray, hi: np.ndarray, iters: int, tol: float) -> np.ndarray:
    """Row-wise golden-section minimization; converged rows are frozen."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        active = (hi - lo) > tol
        if not active.any():
            break
        left = (f1 < f2) & active
        right = ~(f1 < f2) & active
        new_hi = np.where(left, x2, hi)
        new_lo = np.where(right, x1, lo)
        nx = np.where(left, new_hi - _GOLDEN * (new_hi - new_lo), new_lo + _GOLDEN * (new_hi - new_lo))
        fn = fun(nx)
        x2_new = np.where(left, x1, np.where(right, nx, x2))
        f2_new = np.where(left, f1, np.where(right, fn, f2))
        x1_new = np.where(left, nx, np.where(right, x2, x1))
        f1_new = np.where(left, fn, np.where(right, f2, f1))
        lo, hi, x1, x2, f1, f2 = new_lo, new_hi, x1_new, x2_new, f1_new, f2_new
    return 0.5 * (lo + hi)


def _half_width(amps: np.ndarray, P: np.ndarray, cfg: SearchConfig) -> np.ndarray:
    centroid = np.abs(P @ amps)
    return cfg.half_width_mult * (np.max(np.abs(amps)) + centroid)


def _clamp(l: np.ndarray, l_max: float | None) -> np.ndarray:
    if l_max is None:
        return l
    mag = np.abs(l)
    return np.where(mag > l_max, l * (l_max / np.where(mag > 0, mag, 1.0)), l)


def _optimize_rows(amps: np.ndarray, P: np.ndarray, dt: float, alpha: float, cfg: SearchConfig,
                   l_max: float | None = None) -> np.ndarray:
    """Best control for each posterior row of P (U, M); returns complex (U,)."""
    amps = np.asarray(amps, dtype=complex)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    U = P.shape[0]
    if amps.size == 1:
        return np.zeros(U, dtype=complex)
    w = _half_width(amps, P, cfg)
    if np.all(amps.imag == 0):
        best = _search_line(amps, P, dt, alpha, cfg, w, direction=1.0, offset=np.zeros(U))
    else:
        best = _search_plane(amps, P, dt, alpha, cfg, w)
    return _clamp(best, l_max)


def _search_line(amps, P, dt, alpha, cfg, w, direction, offset):
    """Grid then golden refinement along l = offset + x * direction, x in [-w, w]."""
    U = P.shape[0]
    base = np.linspace(-1.0, 1.0, cfg.grid_points)
    xs = w[:, None] * base[None, :]
    ctrl = lambda x: offset[:, None] + x * direction  # noqa: E731
    f = _expected_renyi(amps, P, ctrl(xs), dt, alpha)
    j = _pick_tie(f, ctrl(xs))
    rows = np.arange(U)
    x_grid = xs[rows, j]
    f_grid = f[rows, j]
    lo = xs[rows, np.maximum(j - 1, 0)]
    hi = xs[rows, np.minimum(j + 1, cfg.grid_points - 1)]
    fun = lambda x: _expected_renyi(amps, P, ctrl(x[:, None]), dt, alpha)[:, 0]  # noqa: E731
    x_ref = _golden_rows(fun, lo, hi, cfg.refine_iters, cfg.tol)
    f_ref = fun(x_ref)
    better = f_ref < f_grid - _TIE_RTOL * np.maximum(1.0, np.abs(f_grid))
    x = np.where(better, x_ref, x_grid)
    return offset + x * direction


def _search_plane(amps, P, dt, alpha, cfg, w):
    U = P.shape[0]
    n = cfg.grid_points_2d
    base = np.linspace(-1.0, 1.0, n)
    re, im = np.meshgrid(base, base, indexing="ij")
    cells = (re + 1j * im).ravel()
    cand = w[:, None] * cells[None, :]
    f = _expected_renyi(amps, P, cand, dt, alpha)
    j = _pick_tie(f, cand)
    best = cand[np.arange(U), j]
    step = 2.0 * w / (n - 1)
    # coordinate-wise golden refinement inside the winning grid cell
    for _ in range(2):
        for direction in (1.0, 1j):
            best = _refine_axis(amps, P, dt, alpha, cfg, best, direction, step)
    return best


def _refine_axis(amps, P, dt, alpha, cfg, start, direction, step):
    fun = lambda x: _expected_renyi(amps, P, (start + x * direction)[:, None], dt, alpha)[:, 0]  # noqa: E731
    f0 = fun(np.zeros_like(step))
    x = _golden_rows(fun, -step, step, cfg.refine_iters, cfg.tol)
    fx = fun(x)
    better = fx < f0 - _TIE_RTOL * np.maximum(1.0, np.abs(f0))
    return np.where(better, start + x * direction, start)


def optimize_control(ens: HypothesisEnsemble, post: Posterior, dt: float, alpha: float,
                     cfg: SearchConfig | None = None, l_max: float | None = None) -> complex:
    """Control minimizing the expected posterior Renyi-alpha entropy of one slice.

    Real-valued ensembles are searched along the real line, complex ones on a
    2-D grid. The result is clamped to ``|l| <= l_max`` when given.
    """
    cfg = SearchConfig() if cfg is None else cfg
    if not dt > 0:
        raise ValueError("dt must be positive")
    k = post.slice_index
    if not 0 <= k < ens.n_slices:
        raise IndexError(f"posterior slice {k} outside the ensemble grid")
    amps = ens.amplitude_matrix[:, k]
    return complex(_optimize_rows(amps, post.probs[None, :], dt, alpha, cfg, l_max)[0])


def _decide(P: np.ndarray) -> np.ndarray:
    return np.argmax(P, axis=-1)


def simulate_mary_trial(ens: HypothesisEnsemble, policy: RenyiIncremental, params: DetectionParams,
                        true_h: int, rng: np.random.Generator) -> TrialRecord:
    """One receiver run: optimize, sample, update, slice by slice; decide by MAP."""
    if ens.M < 2:
        raise ValueError("discrimination needs at least two hypotheses")
    l_max = params.resolve_l_max(ens)
    amps = ens.amplitude_matrix
    post = Posterior.from_ensemble(ens)
    clicks = []
    for k in range(ens.n_slices):
        alpha = policy.alpha_schedule(k)
        l = optimize_control(ens, post, ens.dt, alpha, policy.search, l_max)
        p = slice_click_probability(amps[true_h, k], l, ens.dt)
        c = sample_slice(p, rng)
        if c:
            clicks.append(k)
        post = bayes_update(post, ens, k, l, c)
    return TrialRecord(true_h, tuple(clicks), post.argmax(), post)


def _run_rows(ens: HypothesisEnsemble, policy: RenyiIncremental, l_max: float, *,
              true_h: np.ndarray | None = None, uniforms: np.ndarray | None = None,
              clicks: np.ndarray | None = None):
    """Advance many receivers in lockstep.

    Either sample clicks from ``uniforms`` under ``true_h`` or replay a given
    ``clicks`` matrix. Receivers sharing a click history share a posterior, so
    the control search runs once per distinct posterior.
    """
    amps = ens.amplitude_matrix
    n = len(true_h) if clicks is None else clicks.shape[0]
    P = np.tile(ens.priors, (n, 1))
    out_clicks = np.zeros((n, ens.n_slices), dtype=bool)
    for k in range(ens.n_slices):
        alpha = policy.alpha_schedule(k)
        uniq, inv = np.unique(P, axis=0, return_inverse=True)
        l = _optimize_rows(amps[:, k], uniq, ens.dt, alpha, policy.search, l_max)[inv.ravel()]
        q = -np.expm1(-np.abs(amps[None, :, k] + l[:, None]) ** 2 * ens.dt)
        if clicks is None:
            c = uniforms[:, k] < q[np.arange(n), true_h]
        else:
            c = clicks[:, k].astype(bool)
        out_clicks[:, k] = c
        joint = P * np.where(c[:, None], q, 1.0 - q)
        total = joint.sum(axis=1)
        if np.any(total <= 0):
            raise ImpossibleObservation(f"click history impossible under every hypothesis at slice {k}")
        P = joint / total[:, None]
    return P, out_clicks


def simulate_mary_batch(ens: HypothesisEnsemble, policy: RenyiIncremental, params: DetectionParams,
                        true_h: Sequence[int], rngs: Sequence[np.random.Generator]) -> list:
    """Trial-for-trial equivalent of :func:`simulate_mary_trial` over many rngs."""
    if ens.M < 2:
        raise ValueError("discrimination needs at least two hypotheses")
    true_h = np.asarray(true_h, dtype=int)
    if true_h.shape != (len(rngs),):
        raise ValueError("need one rng per trial")
    uniforms = np.stack([r.random(ens.n_slices) for r in rngs]) if len(rngs) else np.zeros((0, ens.n_slices))
    P, clicked = _run_rows(ens, policy, params.resolve_l_max(ens), true_h=true_h, uniforms=uniforms)
    dec = _decide(P)
    return [TrialRecord(int(true_h[i]), tuple(np.flatnonzero(clicked[i])), int(dec[i]),
                        Posterior(P[i], ens.n_slices)) for i in range(len(rngs))]


def replay_posteriors(ens: HypothesisEnsemble, policy: RenyiIncremental, l_max: float,
                      clicks: np.ndarray) -> np.ndarray:
    """Final posteriors for observed click matrices (n_trials, n_slices)."""
    clicks = np.asarray(clicks)
    if clicks.ndim != 2 or clicks.shape[1] != ens.n_slices:
        raise ValueError(f"clicks must have shape (n, {ens.n_slices})")
    P, _ = _run_rows(ens, policy, l_max, clicks=clicks)
    return P


def enumerate_error_probability(ens: HypothesisEnsemble, policy: RenyiIncremental,
                                l_max: float | None = None, max_slices: int = 16) -> float:
    """Exact error probability of the policy by summing over all 2**n click histories."""
    if ens.n_slices > max_slices:
        raise ValueError(f"{ens.n_slices} slices is too many to enumerate (max {max_slices})")
    l_max = DetectionParams(l_max).resolve_l_max(ens)
    amps = ens.amplitude_matrix
    joints = ens.priors[None, :].copy()
    for k in range(ens.n_slices):
        totals = joints.sum(axis=1, keepdims=True)
        P = joints / np.where(totals > 0, totals, 1.0)
        P[totals[:, 0] == 0] = ens.priors
        l = _optimize_rows(amps[:, k], P, ens.dt, policy.alpha_schedule(k), policy.search, l_max)
        q = -np.expm1(-np.abs(amps[None, :, k] + l[:, None]) ** 2 * ens.dt)
        joints = np.concatenate([joints * (1.0 - q), joints * q])
    return float(1.0 - joints.max(axis=1).sum())
