"""Seeded Monte Carlo experiments with deterministic, worker-independent reports."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .capacity import (BITS, dd_capacity, heuristic_ook_probability, holevo_capacity,
                       ook_mutual_information)
from .coded import ook_codebook, run_coded_reception
from .core import (AlphaSchedule, DetectionParams, PerSymbolMI, RenyiIncremental, ZeroControl,
                   trial_rng)
from .dolinar import cumulative_distance, simulate_dolinar_batch, ykl_error
from .estimators import build_ensemble, draw_hypotheses
from .renyi import simulate_mary_batch

KINDS = ("binary-sim", "mary-sim", "capacity", "coded-sim")
CHUNK = 2000
Z95 = 1.959963984540054


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    se: float
    n: int
    ci_low: float
    ci_high: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def mc_from_counts(successes: int, n: int) -> McEstimate:
    """Proportion estimate with a 95% normal-approximation interval.

    With no successes (or no failures) the normal interval collapses, so the
    rule-of-three bound 3/n is reported instead.
    """
    if n < 1:
        raise ValueError("need at least one outcome")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    p = successes / n
    se = math.sqrt(p * (1.0 - p) / n)
    if successes == 0:
        lo, hi = 0.0, min(1.0, 3.0 / n)
    elif successes == n:
        lo, hi = max(0.0, 1.0 - 3.0 / n), 1.0
    else:
        lo, hi = max(0.0, p - Z95 * se), min(1.0, p + Z95 * se)
    return McEstimate(p, se, n, lo, hi)


def mc_aggregate(outcomes) -> McEstimate:
    outcomes = np.asarray(list(outcomes))
    if outcomes.size == 0:
        raise ValueError("cannot aggregate an empty outcome list")
    if np.any((outcomes != 0) & (outcomes != 1)):
        raise ValueError("outcomes must be 0/1")
    return mc_from_counts(int(np.count_nonzero(outcomes)), int(outcomes.size))


def _parse_complex(v, name):
    try:
        return complex(v.replace(" ", "")) if isinstance(v, str) else complex(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot parse {v!r} as a complex amplitude") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; see README for the schema.

    ``T`` (durations) is the sweep axis for the receiver simulations and
    ``energies`` for capacity and coded runs.
    """

    kind: str
    seed: int
    trials: int = 10_000
    amplitudes: tuple = ()
    priors: tuple = ()
    T: tuple = (1.0,)
    slices: int | None = None
    delta: float | None = None
    l_max: float | None = None
    alpha: Any = 1.0
    energies: tuple = ()
    M: int = 256
    N: int = 100
    p: float | None = None
    policy: str = "zero"
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        errs = []
        if self.kind not in KINDS:
            errs.append(f"kind: must be one of {', '.join(KINDS)}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            errs.append("seed: required unsigned 64-bit integer")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            errs.append("trials: must be an integer >= 1")
        if self.format not in ("json", "csv"):
            errs.append("format: must be json or csv")
        if self.l_max is not None and not (isinstance(self.l_max, (int, float)) and self.l_max > 0):
            errs.append("l_max: must be positive")
        if self.kind in ("binary-sim", "mary-sim"):
            amps = [_parse_complex(a, "amplitudes") for a in self.amplitudes]
            object.__setattr__(self, "amplitudes", tuple(amps))
            need = 2 if self.kind == "binary-sim" else None
            if not amps or (need and len(amps) != need):
                errs.append(f"amplitudes: need {need or 'at least two'} values")
            if len(self.priors) != len(amps):
                errs.append("priors: need one prior per amplitude")
            elif any(p < 0 for p in self.priors) or abs(sum(self.priors) - 1) > 1e-9:
                errs.append("priors: must be nonnegative and sum to 1")
            if not self.T or any(not t > 0 for t in self.T):
                errs.append("T: nonempty list of positive durations")
            if (self.slices is None) == (self.delta is None):
                errs.append("slices/delta: give exactly one")
            elif self.slices is not None and self.slices < 1:
                errs.append("slices: must be >= 1")
            elif self.delta is not None and not self.delta > 0:
                errs.append("delta: must be positive")
            try:
                self.schedule()
            except (TypeError, ValueError) as e:
                errs.append(f"alpha: {e}")
        else:
            if not self.energies or any(not 0 < e < math.exp(-1) for e in self.energies):
                errs.append("energies: nonempty list in (0, 1/e)")
        if self.kind == "coded-sim":
            if not (1 <= self.M <= 2 ** 16 and 1 <= self.N <= 2 ** 14):
                errs.append("M/N: need 1 <= M <= 65536 and 1 <= N <= 16384")
            if self.p is not None and not 0 < self.p <= 1:
                errs.append("p: must lie in (0, 1]")
            if self.policy not in ("zero", "mi"):
                errs.append("policy: zero or mi")
        if errs:
            raise ConfigError("; ".join(errs))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "seed" not in data:
            raise ConfigError("seed: required (no wall-clock seeding)")
        data = dict(data)
        for key in ("amplitudes", "priors", "T", "energies"):
            if key in data:
                v = data[key]
                data[key] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        if isinstance(data.get("alpha"), dict):
            data["alpha"] = {k: tuple(v) for k, v in data["alpha"].items()}
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def schedule(self) -> AlphaSchedule:
        a = self.alpha
        if isinstance(a, dict):
            extra = set(a) - {"values", "breaks"}
            if extra:
                raise ValueError(f"unknown schedule keys {sorted(extra)}")
            return AlphaSchedule(tuple(a.get("values", ())), tuple(a.get("breaks", ())))
        return AlphaSchedule.constant(float(a))

    def n_slices(self, T: float) -> int:
        return int(self.slices) if self.slices is not None else max(1, int(round(T / self.delta)))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["amplitudes"] = [[a.real, a.imag] for a in self.amplitudes]
        for key in ("priors", "T", "energies"):
            d[key] = list(d[key])
        if isinstance(self.alpha, dict):
            d["alpha"] = {k: list(v) for k, v in self.alpha.items()}
        for key in ("out", "format"):
            d.pop(key)
        return d


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _chunks(n: int):
    return [(s, min(n, s + CHUNK)) for s in range(0, n, CHUNK)]


def _receiver_chunk(cfg: ExperimentConfig, T: float, start: int, stop: int) -> int:
    ens = build_ensemble(cfg.amplitudes, cfg.priors, T, cfg.n_slices(T))
    params = DetectionParams(cfg.l_max, cfg.seed)
    rngs = [trial_rng(cfg.seed, i) for i in range(start, stop)]
    h = draw_hypotheses(ens.priors, rngs)
    if cfg.kind == "binary-sim":
        records = simulate_dolinar_batch(ens, params, h, rngs)
    else:
        records = simulate_mary_batch(ens, RenyiIncremental(cfg.schedule()), params, h, rngs)
    return sum(r.error for r in records)


def _coded_setup(cfg: ExperimentConfig, j: int):
    E = cfg.energies[j]
    p = heuristic_ook_probability(E) if cfg.p is None else cfg.p
    cb = ook_codebook(cfg.M, cfg.N, E, min(p, 1.0), np.random.default_rng([cfg.seed, 0xC0DE, j]))
    return E, cb


def _coded_chunk(cfg: ExperimentConfig, j: int, start: int, stop: int):
    _, cb = _coded_setup(cfg, j)
    policy = ZeroControl() if cfg.policy == "zero" else PerSymbolMI()
    errors, densities = 0, []
    for i in range(start, stop):
        rng = trial_rng(cfg.seed, i)
        msg = int(rng.integers(cb.M))
        rx = run_coded_reception(cb, msg, policy, DetectionParams(cfg.l_max, cfg.seed), rng)
        errors += rx.decoded != msg
        densities.append(math.fsum(rx.info_trace))
    return errors, densities


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _receiver_points(cfg, workers):
    jobs = [(cfg, T, s, e) for T in cfg.T for s, e in _chunks(cfg.trials)]
    counts = iter(_map(_receiver_chunk, jobs, workers))
    points = []
    for T in cfg.T:
        errors = sum(next(counts) for _ in _chunks(cfg.trials))
        n = cfg.n_slices(T)
        pt = {"T": T, "n_slices": n, **mc_from_counts(errors, cfg.trials).as_dict()}
        if cfg.kind == "binary-sim":
            ens = build_ensemble(cfg.amplitudes, cfg.priors, T, n)
            pt["reference"] = ykl_error(float(ens.priors[0]), float(cumulative_distance(ens)[-1]))
        points.append(pt)
    return points


def _capacity_points(cfg):
    points = []
    for E in cfg.energies:
        dd = dd_capacity(E)
        hol = holevo_capacity(E)
        points.append({"E": E, "holevo": hol, "dd": dd.value, "dd_p": dd.optimal_param,
                       "holevo_pie_bits": hol / E / BITS, "dd_pie_bits": dd.pie_bits})
    return points


def _coded_points(cfg, workers):
    jobs = [(cfg, j, s, e) for j in range(len(cfg.energies)) for s, e in _chunks(cfg.trials)]
    results = iter(_map(_coded_chunk, jobs, workers))
    points = []
    for j, E in enumerate(cfg.energies):
        errors, dens = 0, []
        for _ in _chunks(cfg.trials):
            e, d = next(results)
            errors += e
            dens.extend(d)
        _, cb = _coded_setup(cfg, j)
        per_symbol = np.asarray(dens) / cfg.N
        sd = float(np.std(per_symbol, ddof=1)) if len(dens) > 1 else 0.0
        pt = {"E": E, "p": float(cb.realized_dist[1]), "rate": math.log(cfg.M) / cfg.N,
              **mc_from_counts(errors, cfg.trials).as_dict(),
              "info_density": math.fsum(dens) / (cfg.trials * cfg.N),
              "info_density_se": sd / math.sqrt(len(dens)),
              "reference": ook_mutual_information(E, float(cb.realized_dist[1]))}
        points.append(pt)
    return points


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Run a configured experiment; the result depends only on ``cfg``."""
    if workers < 1:
        raise ConfigError("workers: must be >= 1")
    if cfg.kind == "capacity":
        points = _capacity_points(cfg)
    elif cfg.kind == "coded-sim":
        points = _coded_points(cfg, workers)
    else:
        points = _receiver_points(cfg, workers)
    return {"toolkit": "coherent_rx", "version": __version__, "config_hash": config_hash(cfg),
            "config": cfg.to_dict(), "points": points}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_csv(report: dict) -> str:
    rows = report["points"]
    cols = list(dict.fromkeys(k for r in rows for k in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    w.writerows({k: repr(float(v)) if isinstance(v, float) else v for k, v in r.items()} for r in rows)
    return buf.getvalue()
