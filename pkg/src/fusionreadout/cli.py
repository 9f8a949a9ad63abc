"""Command-line entry point: ``lock``, ``run``, ``analyze`` and ``report``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import UnpairedCells
from .estimator import MissingLockedState
from .harness import (
    BenchmarkConfig,
    ConfigError,
    cmd_analyze,
    cmd_lock,
    cmd_report,
    cmd_run,
    results_path,
)

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_UNPAIRED = 0, 2, 3, 4


def _config(args) -> BenchmarkConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError([f"config: cannot read {args.config}: {err}"]) from err
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.regime is not None:
        data["regime"] = args.regime
    if args.out is not None:
        data["output"] = args.out
    return BenchmarkConfig.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fusionreadout", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("lock", "optimise and persist locked VQE states"),
        ("run", "run all estimator cells of a config"),
        ("analyze", "emit tables from results files"),
        ("report", "print a readable summary of a run"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON benchmark configuration")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--regime", choices=("noiseless", "noisy"))
        p.add_argument("--out", help="output directory (default $FUSIONREADOUT_OUT)")
        if name in ("analyze", "report"):
            p.add_argument("results", nargs="*", help="results .jsonl files (default: the config's)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "lock":
            for path in cmd_lock(cfg):
                print(path)
        elif args.command == "run":
            print(cmd_run(cfg, workers=args.workers))
        else:
            paths = args.results or [results_path(cfg)]
            missing = [p for p in paths if not Path(p).exists()]
            if missing:
                print(f"error: missing results file(s): {', '.join(map(str, missing))}", file=sys.stderr)
                return EXIT_MISSING
            summary = cmd_analyze(paths, cfg.out_dir / "report")
            text = cmd_report(summary)
            (cfg.out_dir / "report" / "report.md").write_text(text)
            if args.command == "report":
                print(text, end="")
            else:
                print(cfg.out_dir / "report")
    except ConfigError as err:
        for e in err.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingLockedState as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_MISSING
    except UnpairedCells as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_UNPAIRED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
