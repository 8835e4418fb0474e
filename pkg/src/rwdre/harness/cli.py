"""Command line front end.

Each subcommand maps to one experiment preset; the config file carries
the model, horizon, and options, while the flags override seed, replica
count, and output directory.  Exit codes: 0 done, 2 bad configuration,
3 a resource budget stopped the run before it produced results, 4 the
run finished but the breach rate flagged it as unreliable.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..environment import BudgetError
from ..model import ConfigError, load_config
from ..renorm.dp import StateBudgetError
from .emit import emit_outputs
from .run import run_experiment
from .spec import ExperimentSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_FLAGGED = 4

_COMMANDS = {
    # subcommand: (preset, forced options)
    "simulate": ("single_run", {}),
    "speed-curve": ("speed_curve", {}),
    "rho-curve": ("rho_curve", {}),
    "static-solomon": ("static_solomon", {}),
    "block-tails": ("block_tails", {}),
    "coverage": ("coverage_probe", {"probe": "closed_loop"}),
    "f-estimate": ("coverage_probe", {"probe": "f"}),
    "constants-check": ("constants_report", {}),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwdre",
        description="run walker-in-particle-field experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (preset, _) in _COMMANDS.items():
        cmd = sub.add_parser(name, help=f"run the {preset} preset")
        cmd.add_argument("--config", required=True,
                         help="JSON experiment file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the base seed")
        cmd.add_argument("--replicas", type=int, default=None,
                         help="override the replica count")
        cmd.add_argument("--out", default=None,
                         help="output directory (default: spec out_dir, "
                              "else print summary to stdout)")
        cmd.add_argument("--workers", type=int, default=1,
                         help="worker processes (default 1)")
    return parser


def spec_from_args(args) -> ExperimentSpec:
    preset, forced = _COMMANDS[args.command]
    obj = load_config(args.config)
    obj["preset"] = preset
    if forced:
        options = dict(obj.get("options", {}))
        options.update(forced)
        obj["options"] = options
    if args.seed is not None:
        obj["base_seed"] = args.seed
    elif "base_seed" not in obj:
        obj["base_seed"] = 0
    if args.replicas is not None:
        obj["replicas"] = args.replicas
    if args.out is not None:
        obj["out_dir"] = args.out
    return ExperimentSpec.from_dict(obj)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        outcome = run_experiment(spec, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, StateBudgetError) as exc:
        print(f"resource budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if spec.out_dir is not None:
        paths = emit_outputs(outcome, workers=args.workers)
        for name in sorted(paths):
            print(paths[name])
    else:
        json.dump(outcome.summary, sys.stdout, sort_keys=True, indent=1)
        print()
    for flag in outcome.flags:
        print(f"flag: {flag}", file=sys.stderr)
    return EXIT_FLAGGED if outcome.flags else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
