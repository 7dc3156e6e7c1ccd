"""Command-line entry point.

Subcommands:
  run <config-path>          run an experiment from a flat key=value file
  list-experiments           show experiments and their valid algorithms
  print-defaults <name>      print the resolved default config for an experiment

Flags on ``run``: --seed, --trials, --out, and repeatable --set key=value
overrides (same literal syntax as config files).  Exit code 0 on success,
1 on configuration errors, 2 on runtime errors.  The environment variable
KALMANTD_OUT_DIR redirects CSV output into that directory.
"""

import argparse
import sys
from dataclasses import replace

from ..errors import ConfigError, KalmanTdError
from .config import (EXPERIMENTS, config_from_entries, default_config,
                     parse_config_file, parse_value, serialize_config)
from .runner import resolve_output_path, run_experiment


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="kalmantd",
        description="Kalman temporal-difference benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("config", help="path to a flat key = value config file")
    run_p.add_argument("--seed", type=int, default=None, help="override base_seed")
    run_p.add_argument("--trials", type=int, default=None, help="override trial count")
    run_p.add_argument("--out", default=None, help="override the CSV output path")
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override any config key (repeatable)")

    sub.add_parser("list-experiments", help="list experiments and algorithms")

    defaults_p = sub.add_parser("print-defaults",
                                help="print the default config for an experiment")
    defaults_p.add_argument("experiment")
    defaults_p.add_argument("--algorithm", default=None)
    return parser


def _apply_overrides(config, args):
    entries = dict(config.flat())
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        entries[key.strip()] = parse_value(value)
    config = config_from_entries(entries)
    core = {}
    if args.seed is not None:
        core["base_seed"] = args.seed
    if args.trials is not None:
        core["trials"] = args.trials
    if args.out is not None:
        core["output_path"] = args.out
    if core:
        config = replace(config, **core)
    if not config.output_path:
        config = replace(
            config, output_path=f"{config.experiment}_{config.algorithm}.csv")
    return config


def _cmd_run(args):
    config = _apply_overrides(parse_config_file(args.config), args)
    series = run_experiment(config)
    out = resolve_output_path(config.output_path)
    last = series.checkpoints[-1] if series.checkpoints else None
    print(f"wrote {out} ({config.trials} trials, {len(series.checkpoints)} checkpoints)")
    if last is not None:
        print(f"final checkpoint {last}: mean metric {series.at(last):.6g}")
    return 0


def _cmd_list(_args):
    for name in sorted(EXPERIMENTS):
        algos = ", ".join(EXPERIMENTS[name]["algorithms"])
        print(f"{name}: {algos}")
    return 0


def _cmd_defaults(args):
    config = default_config(args.experiment, args.algorithm)
    sys.stdout.write(serialize_config(config))
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list-experiments":
            return _cmd_list(args)
        return _cmd_defaults(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (KalmanTdError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
