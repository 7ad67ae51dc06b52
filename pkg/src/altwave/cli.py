"""Command-line entry point: ``altwave <command> [--config PATH] [--out PATH] ...``.

Exit codes: 0 success, 2 hard-assertion failure, 1 usage or configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import ConfigurationError
from .experiments import COMMANDS, DEFAULTS, ExperimentConfig, default_config, run


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="altwave", description="Sweeps for the alternating-boundary waveguide.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="JSON configuration")
        s.add_argument("--out", type=Path, help="CSV output; the JSON report goes next to it")
        s.add_argument("--levels", type=int, help="number of mesh levels")
        s.add_argument("--seed", type=int, help="seed for random right-hand sides")
    return p


def load_config(args) -> ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read {args.config}: {exc}") from exc
        cfg = ExperimentConfig.from_json(text)
        if cfg.command != args.command:
            raise ConfigurationError(f"field 'command': config is for {cfg.command!r}, not {args.command!r}")
    else:
        cfg = default_config(args.command)
    over = {}
    if args.levels is not None:
        over["levels"] = args.levels
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = str(args.out)
    return dataclasses.replace(cfg, **over) if over else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigurationError, ValueError) as exc:
        print(f"altwave: configuration error: {exc}", file=sys.stderr)
        return 1
    rep = run(cfg)
    csv_text = rep.csv(cfg.digest())
    json_text = rep.json(cfg)
    if cfg.out:
        out = Path(cfg.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text, encoding="utf-8")
        out.with_suffix(".json").write_text(json_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    for name, ok in sorted(rep.checks.items()):
        print(f"{'PASS' if ok else 'FAIL'} {rep.command}.{name}", file=sys.stderr)
    for point, msg in rep.failures:
        print(f"FAIL {rep.command} point {point}: {msg}", file=sys.stderr)
    return 0 if rep.ok else 2


if __name__ == "__main__":
    sys.exit(main())
