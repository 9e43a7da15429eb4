"""Command-line entry point: ``coherent-rx <kind> [options]``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .harness import KINDS, ConfigError, ExperimentConfig, report_csv, report_json, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load_yaml(path: str, what: str):
    try:
        return yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"{what}: cannot read {path}: {e}") from None


def _alpha(value: str):
    try:
        return float(value)
    except ValueError:
        sched = _load_yaml(value, "alpha")
        if not isinstance(sched, dict):
            raise ConfigError("alpha: schedule file must hold a mapping with values/breaks") from None
        return sched


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coherent-rx", description="Coherent-state receiver experiments.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", help="YAML or JSON file of ExperimentConfig keys")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int)
    grid = parser.add_mutually_exclusive_group()
    grid.add_argument("--delta", type=float, help="slice width")
    grid.add_argument("--slices", type=int, help="slices per observation")
    parser.add_argument("--lmax", type=float, dest="l_max")
    parser.add_argument("--alpha", help="Renyi order or a schedule file")
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument("--workers", type=int, default=1)
    return parser


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data = _load_yaml(args.config, "config") or {}
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a mapping")
    if data.get("kind", args.kind) != args.kind:
        raise ConfigError(f"kind: config says {data['kind']!r} but command is {args.kind!r}")
    data["kind"] = args.kind
    for key in ("seed", "trials", "l_max", "out", "format"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.delta is not None:
        data["delta"], data["slices"] = args.delta, None
    if args.slices is not None:
        data["slices"], data["delta"] = args.slices, None
    if args.alpha is not None:
        data["alpha"] = _alpha(args.alpha)
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.workers < 1:
            raise ConfigError("workers: must be >= 1")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg, args.workers)
        text = report_json(report) if cfg.format == "json" else report_csv(report)
        if cfg.out:
            Path(cfg.out).write_text(text)
        else:
            sys.stdout.write(text)
    except Exception as e:  # noqa: BLE001
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
