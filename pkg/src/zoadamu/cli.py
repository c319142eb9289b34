"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import harness, serve as serve_mod
from .errors import (
    ConfigError,
    EmptyGrid,
    MismatchedObjective,
    NonFiniteLoss,
    ZoAdaMUError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_common(sub, multi_config=False):
    sub.add_argument(
        "--config", required=True, action="append" if multi_config else None,
        help="path to a key=value config file",
    )
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zoadamu",
        description="Gradient-free optimization benchmark harness",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    _add_common(subs.add_parser("run", help="execute an optimizer/objective grid"))
    _add_common(
        subs.add_parser("compare", help="side-by-side report for >=2 optimizers"),
        multi_config=True,
    )
    _add_common(subs.add_parser("grid-search", help="search over (t1, t2, t3)"))
    val = subs.add_parser("validate", help="check a config without running")
    val.add_argument("--config", required=True)
    subs.add_parser("serve", help="JSON-lines optimizer service on stdin/stdout")
    return parser


def _load(path, seed_override):
    cfg = harness.load_config(path)
    if seed_override is not None:
        cfg = dataclasses.replace(cfg, seed=seed_override)
        cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            harness.load_config(args.config)
            print("config ok")
            return EXIT_OK
        if args.command == "serve":
            return serve_mod.serve()
        if args.command == "run":
            metrics = harness.run(_load(args.config, args.seed), args.out, threads=args.threads)
            print(json.dumps(metrics["optimizers"], indent=2, sort_keys=True))
            return EXIT_OK
        if args.command == "compare":
            cfgs = [_load(p, args.seed) for p in args.config]
            report = harness.compare(cfgs, args.out, threads=args.threads)
            print(json.dumps(report, indent=2, sort_keys=True))
            return EXIT_OK
        if args.command == "grid-search":
            result = harness.grid_search(_load(args.config, args.seed), args.out,
                                         threads=args.threads)
            print(json.dumps(result["best"], indent=2, sort_keys=True))
            return EXIT_OK
        raise AssertionError(args.command)
    except (ConfigError, EmptyGrid, MismatchedObjective, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteLoss, ZoAdaMUError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
