"""Command-line driver: ``maam-plan plan --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import Disconnected, EmptyColumn, InvariantError, NoFeasibleOrientation, NoPath, ParseError
from .pipeline import read_config, run_pipeline

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNPRINTABLE = 3
EXIT_DISCONNECTED = 4


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maam-plan", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    plan = sub.add_parser("plan", help="plan a waypoint file and write G-code plus a speed report")
    plan.add_argument("--config", required=True, type=Path, help="INI config file")
    plan.add_argument("--trace", action="store_true", help="log each planning step to stderr and trace.log")
    plan.add_argument("--no-singularity", action="store_true", help="skip singular-region processing")
    plan.add_argument("--no-variants", action="store_true", help="skip collision variants and edge pruning")
    plan.add_argument("--seed", type=int, default=None, help="override the config rng seed")
    plan.add_argument("--out", type=Path, default=None, help="output directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.trace else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        cfg = read_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    changes = {"singularity": not args.no_singularity, "variants": not args.no_variants}
    if args.seed is not None:
        changes["rng_seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    cfg = replace(cfg, **changes)
    if cfg.toolpath is None:
        print("config error: [io] toolpath is required", file=sys.stderr)
        return EXIT_PARSE

    try:
        result = run_pipeline(cfg)
    except (ParseError, InvariantError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NoFeasibleOrientation, EmptyColumn) as exc:
        print(f"unprintable waypoint {exc.waypoint_index}: {exc}", file=sys.stderr)
        return EXIT_UNPRINTABLE
    except Disconnected as exc:
        print(f"disconnected graph at waypoint {exc.waypoint_index}: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED
    except NoPath as exc:
        print(f"disconnected graph: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED

    if args.trace:
        (Path(cfg.out) / "trace.log").write_text("\n".join(result.trace) + "\n", encoding="utf-8")
    print(result.report.summary, end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
