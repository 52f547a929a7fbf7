"""Command line entry point: ``aap-altitude <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments, model
from .errors import ConfigError, Infeasible
from .experiments import Experiment

log = logging.getLogger("aap_altitude")

SUBCOMMANDS = {
    "solve": Experiment.SOLVE,
    "sweep-altitude": Experiment.ALTITUDE_SWEEP,
    "sweep-rate": Experiment.RATE_SWEEP,
    "trace": Experiment.CONVERGENCE_TRACE,
    "compare": Experiment.ROTOR_ENERGY_COMPARISON,
}


def default_config(experiment: Experiment) -> dict:
    """Reference scenario plus a sweep range suited to the experiment."""
    scenario = model.default_scenario()
    raw = {"scenario": scenario.to_dict(), "experiment": experiment.value}
    if experiment is Experiment.ALTITUDE_SWEEP:
        raw["sweep"] = {"start": scenario.h_min_m, "stop": scenario.h_max_m, "steps": 1101}
    elif experiment is Experiment.RATE_SWEEP:
        # Wide enough to show the plateau and the rate-capped decline of both policies.
        raw["sweep"] = {"start": 5e6, "stop": 150e6, "steps": 146}
    return raw


def _load(args, experiment: Experiment) -> dict:
    if args.config is None:
        return default_config(experiment)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{args.config} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a JSON object")
    given = raw.get("experiment")
    if given is None:
        raw["experiment"] = experiment.value
    elif given != experiment.value:
        raise ConfigError("experiment", f"config is for {given!r}, subcommand runs {experiment.value!r}")
    return raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aap-altitude", description="Energy-efficient hover altitude experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, experiment in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {experiment.value} experiment")
        p.add_argument("--config", help="experiment config (JSON); defaults to the reference scenario")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--solver", choices=[s.value for s in experiments.Solver])
        p.add_argument("--points", type=int, help="oracle grid size (sample count for sweep-altitude)")
        if experiment is Experiment.SOLVE:
            p.add_argument("--timing", action="store_true", help="add a wall_time_ms column (not reproducible)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    experiment = SUBCOMMANDS[args.command]
    try:
        raw = _load(args, experiment)
        if args.solver is not None:
            raw["solver"] = args.solver
        if args.points is not None:
            if experiment is Experiment.ALTITUDE_SWEEP and isinstance(raw.get("sweep"), dict):
                raw["sweep"]["steps"] = args.points
            else:
                raw.setdefault("oracle", {})["n_points"] = args.points
        if getattr(args, "timing", False):
            raw["timing"] = True
        spec = experiments.validate_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return experiments.EXIT_CONFIG

    out = args.out or spec.output_path or f"{experiment.value}.csv"
    try:
        status = experiments.run(spec, out)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return experiments.EXIT_INFEASIBLE
    log.info("wrote %s", out)
    if status == experiments.EXIT_NONCONVERGENCE:
        print("warning: a solver stopped at its iteration cap", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
