"""Command-line entry point.

    reachlab <kind> --config cfg.json --out results/ [--workers N] [--seed S]

Exit codes: 0 success, 2 config rejected by the schema, 3 experiment
failure (whatever completed stays on disk, plus an aborted.json note).
All configuration is explicit; no environment variables are read.
"""

import argparse
import json
import os
import sys

from ..errors import (
    ConfigError,
    ContractError,
    NumericalError,
    SchemaError,
    SimulationError,
    TrainingDivergedError,
)
from .config import KINDS, parse_config
from .experiments import run_experiment
from .io import canonical_json

_RUNTIME_ERRORS = (
    ContractError,
    NumericalError,
    SimulationError,
    TrainingDivergedError,
    SchemaError,
)


def build_parser():
    p = argparse.ArgumentParser(
        prog="reachlab",
        description="Run one canned diffusion/complexity experiment from a JSON config.",
    )
    p.add_argument("kind", choices=sorted(KINDS), help="experiment kind")
    p.add_argument("--config", required=True, help="path to the JSON config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep cells (default 1)")
    p.add_argument("--seed", type=int, default=None, help="override the config's seed")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(args.kind, raw, seed_override=args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        bundle = run_experiment(cfg, args.out, workers=args.workers)
    except _RUNTIME_ERRORS as exc:
        os.makedirs(args.out, exist_ok=True)
        note = {"kind": cfg.kind, "config": cfg.snapshot(), "error": str(exc)}
        with open(os.path.join(args.out, "aborted.json"), "w") as fh:
            fh.write(canonical_json(note))
        print(f"error: experiment failed: {exc}", file=sys.stderr)
        return 3
    n_flagged = len(bundle.flags)
    tail = f" ({n_flagged} cell(s) flagged)" if n_flagged else ""
    print(f"{cfg.kind}: {len(bundle.records)} record(s) -> {args.out}{tail}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
