"""Experiment configs, runners and deterministic CSV output."""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model, oracle
from .errors import ConfigError, Infeasible, InvalidParams
from .mfp import MfpSettings, mfp_optimize
from .results import Termination
from .scp import ScpSettings, scp_optimize


class Experiment(str, enum.Enum):
    SOLVE = "solve"
    ALTITUDE_SWEEP = "altitude_sweep"
    RATE_SWEEP = "rate_sweep"
    CONVERGENCE_TRACE = "convergence_trace"
    ROTOR_ENERGY_COMPARISON = "rotor_energy_comparison"


class Solver(str, enum.Enum):
    SCP = "scp"
    MFP = "mfp"
    ORACLE = "oracle"
    ALL = "all"

    def expand(self) -> list["Solver"]:
        if self is Solver.ALL:
            return [Solver.SCP, Solver.MFP, Solver.ORACLE]
        return [self]


SWEEP_EXPERIMENTS = {Experiment.ALTITUDE_SWEEP, Experiment.RATE_SWEEP}

# Rate sweeps solve hundreds of scenarios; the oracle keeps them fast and
# exactly reproducible. Solve and compare cross-check every solver.
DEFAULT_SOLVER = {
    Experiment.SOLVE: Solver.ALL,
    Experiment.ALTITUDE_SWEEP: Solver.ORACLE,
    Experiment.RATE_SWEEP: Solver.ORACLE,
    Experiment.CONVERGENCE_TRACE: Solver.MFP,
    Experiment.ROTOR_ENERGY_COMPARISON: Solver.ALL,
}

DEFAULT_ORACLE_POINTS = 100_000


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    steps: int

    def values(self) -> list[float]:
        lo, hi = sorted((self.start, self.stop))
        return [float(x) for x in np.linspace(lo, hi, self.steps)]


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: model.ScenarioParams
    experiment: Experiment
    sweep: Sweep | None = None
    solver: Solver = Solver.ALL
    output_path: str | None = None
    scp: ScpSettings = field(default_factory=ScpSettings)
    mfp: MfpSettings = field(default_factory=MfpSettings)
    oracle_points: int = DEFAULT_ORACLE_POINTS
    timing: bool = False

    def resolved(self) -> dict:
        """Fully expanded config, suitable for echoing and hashing."""
        return {
            "scenario": self.scenario.to_dict(),
            "experiment": self.experiment.value,
            "sweep": dataclasses.asdict(self.sweep) if self.sweep else None,
            "solver": self.solver.value,
            "output_path": self.output_path,
            "scp": dataclasses.asdict(self.scp),
            "mfp": dataclasses.asdict(self.mfp),
            "oracle": {"n_points": self.oracle_points},
            "timing": self.timing,
        }

    def config_hash(self) -> str:
        doc = self.resolved()
        doc.pop("output_path")
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


TOP_LEVEL_KEYS = {"scenario", "experiment", "sweep", "solver", "output_path", "scp", "mfp", "oracle", "timing"}


def _number(raw, path, integer=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(path, f"expected a number, got {raw!r}")
    if integer and int(raw) != raw:
        raise ConfigError(path, f"expected an integer, got {raw!r}")
    if not math.isfinite(raw):
        raise ConfigError(path, "must be finite")
    return int(raw) if integer else float(raw)


def _settings(cls, raw, path):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    values = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown key")
        if value is None and key == "h_init":
            values[key] = None
            continue
        integer = key.startswith("max_")
        values[key] = _number(value, f"{path}.{key}", integer=integer)
    try:
        return cls(**values)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _enum(cls, raw, path):
    try:
        return cls(raw)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(path, f"expected one of {choices}, got {raw!r}") from None


def validate_config(raw) -> ExperimentSpec:
    """Validate a JSON config document and return the resolved spec.

    Unknown keys anywhere are errors. Solver settings left out of the
    document take their defaults.
    """
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a JSON object")
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(key, "unknown key")
    if "scenario" not in raw:
        raise ConfigError("scenario", "missing required key")
    if "experiment" not in raw:
        raise ConfigError("experiment", "missing required key")
    try:
        scenario = model.ScenarioParams.from_dict(raw["scenario"])
    except InvalidParams as exc:
        path = f"scenario.{exc.field}" if exc.field else "scenario"
        raise ConfigError(path, exc.reason) from None
    experiment = _enum(Experiment, raw["experiment"], "experiment")

    sweep = None
    if experiment in SWEEP_EXPERIMENTS:
        s = raw.get("sweep")
        if not isinstance(s, dict):
            raise ConfigError("sweep", f"required object for experiment {experiment.value}")
        for key in s:
            if key not in ("start", "stop", "steps"):
                raise ConfigError(f"sweep.{key}", "unknown key")
        for key in ("start", "stop", "steps"):
            if key not in s:
                raise ConfigError(f"sweep.{key}", "missing required key")
        sweep = Sweep(
            _number(s["start"], "sweep.start"),
            _number(s["stop"], "sweep.stop"),
            _number(s["steps"], "sweep.steps", integer=True),
        )
        if sweep.steps < 2:
            raise ConfigError("sweep.steps", "must be >= 2")
        if experiment is Experiment.ALTITUDE_SWEEP and min(sweep.start, sweep.stop) <= 0:
            raise ConfigError("sweep", "altitudes must be > 0")
        if experiment is Experiment.RATE_SWEEP and min(sweep.start, sweep.stop) < 0:
            raise ConfigError("sweep", "rates must be >= 0")
    elif raw.get("sweep") is not None:
        raise ConfigError("sweep", f"not allowed for experiment {experiment.value}")

    solver = DEFAULT_SOLVER[experiment]
    if raw.get("solver") is not None:
        solver = _enum(Solver, raw["solver"], "solver")

    output_path = raw.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output_path", "expected a string")

    oracle_points = DEFAULT_ORACLE_POINTS
    if raw.get("oracle") is not None:
        o = raw["oracle"]
        if not isinstance(o, dict):
            raise ConfigError("oracle", "expected an object")
        for key in o:
            if key != "n_points":
                raise ConfigError(f"oracle.{key}", "unknown key")
        if "n_points" in o:
            oracle_points = _number(o["n_points"], "oracle.n_points", integer=True)
            if oracle_points < 3:
                raise ConfigError("oracle.n_points", "must be >= 3")

    timing = raw.get("timing", False)
    if not isinstance(timing, bool):
        raise ConfigError("timing", "expected a boolean")

    return ExperimentSpec(
        scenario=scenario,
        experiment=experiment,
        sweep=sweep,
        solver=solver,
        output_path=output_path,
        scp=_settings(ScpSettings, raw.get("scp"), "scp"),
        mfp=_settings(MfpSettings, raw.get("mfp"), "mfp"),
        oracle_points=oracle_points,
        timing=timing,
    )


# --- solving -----------------------------------------------------------------


@dataclass(frozen=True)
class SolverOutcome:
    solver: Solver
    h_opt: float
    gee: float
    iterations: int
    termination: Termination
    wall_time_ms: float


def solve_with(solver: Solver, params: model.ScenarioParams, spec: ExperimentSpec) -> SolverOutcome:
    if solver is Solver.SCP:
        r = scp_optimize(params, spec.scp)
        return SolverOutcome(solver, r.h_opt, r.gee_opt, r.iterations, r.termination, r.wall_time_ms)
    if solver is Solver.MFP:
        r = mfp_optimize(params, spec.mfp)
        return SolverOutcome(solver, r.h_opt, r.gee_opt, r.iterations, r.termination, r.wall_time_ms)
    if solver is Solver.ORACLE:
        start = time.perf_counter()
        o = oracle.grid_argmax(params, spec.oracle_points)
        ms = (time.perf_counter() - start) * 1e3
        return SolverOutcome(solver, o.h_star, o.gee_star, o.grid_points, Termination.CONVERGED, ms)
    raise ValueError(f"cannot solve with {solver}")


@dataclass(frozen=True)
class ComparisonReport:
    h_opt_scp: float
    h_opt_mfp: float
    h_opt_oracle: float
    h_opt_no_rotor: float
    altitude_gap_m: float
    gee_gain: float


def rotor_energy_comparison(spec: ExperimentSpec) -> ComparisonReport:
    """Optimal altitude with and without rotor energy in the objective.

    Both altitudes are scored with the full energy model, so ``gee_gain`` is
    what ignoring the rotor costs in practice.
    """
    params = spec.scenario
    coeffs = model.derive_coefficients(params)
    h_scp = solve_with(Solver.SCP, params, spec).h_opt
    h_mfp = solve_with(Solver.MFP, params, spec).h_opt
    h_oracle = solve_with(Solver.ORACLE, params, spec).h_opt
    h_free = solve_with(Solver.ORACLE, params.without_rotor_energy(), spec).h_opt
    gain = float(model.gee(params, coeffs, h_oracle) - model.gee(params, coeffs, h_free))
    return ComparisonReport(h_scp, h_mfp, h_oracle, h_free, h_free - h_oracle, gain)


# --- CSV ------------------------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".11e")
    return str(value)


def render_csv(spec: ExperimentSpec, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# aap_altitude experiment={spec.experiment.value} config_sha256={spec.config_hash()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


# --- experiments -----------------------------------------------------------------


@dataclass
class Table:
    header: list[str]
    rows: list[list]
    nonconverged: bool = False


def solve_table(spec: ExperimentSpec) -> Table:
    header = ["solver", "h_opt_m", "gee", "iterations", "termination"]
    if spec.timing:
        header.append("wall_time_ms")
    rows = []
    bad = False
    for solver in spec.solver.expand():
        out = solve_with(solver, spec.scenario, spec)
        bad |= out.termination is not Termination.CONVERGED
        row = [out.solver, out.h_opt, out.gee, out.iterations, out.termination]
        if spec.timing:
            row.append(out.wall_time_ms)
        rows.append(row)
    return Table(header, rows, bad)


def altitude_sweep_table(spec: ExperimentSpec) -> Table:
    s = spec.sweep
    curve = oracle.gee_curve(spec.scenario, s.steps, min(s.start, s.stop), max(s.start, s.stop))
    rows = [[r.h, r.gee, r.sum_rate, r.e_total] for r in curve]
    return Table(["h_m", "gee", "sum_rate_bits_per_hz", "energy_j"], rows)


POLICIES = (("rotor_modeled", False), ("rotor_zeroed", True))


def rate_sweep_table(spec: ExperimentSpec) -> Table:
    """Efficiency versus rate floor under two hover policies.

    Each policy picks its altitude with or without rotor energy in the
    objective; the reported ``gee`` always uses the full energy model.
    """
    header = ["r0_bps", "policy", "solver", "h_cap_rate_m", "h_opt_m", "gee", "termination", "status"]
    rows = []
    bad = False
    nan = float("nan")
    for r0 in spec.sweep.values():
        params = dataclasses.replace(spec.scenario, r0_bps=r0)
        try:
            coeffs = model.derive_coefficients(params)
        except Infeasible:
            beta = model.derive_coefficients(dataclasses.replace(params, r0_bps=0.0)).beta
            cap = model.rate_cap(beta, r0, params.bandwidth_hz)
            for policy, _ in POLICIES:
                for solver in spec.solver.expand():
                    rows.append([r0, policy, solver, cap, nan, nan, Termination.INFEASIBLE, "infeasible"])
            continue
        for policy, zeroed in POLICIES:
            chooser = params.without_rotor_energy() if zeroed else params
            for solver in spec.solver.expand():
                out = solve_with(solver, chooser, spec)
                bad |= out.termination is not Termination.CONVERGED
                g = float(model.gee(params, coeffs, out.h_opt))
                rows.append([r0, policy, solver, coeffs.h_cap_rate, out.h_opt, g, out.termination, "ok"])
    return Table(header, rows, bad)


def convergence_trace_table(spec: ExperimentSpec) -> Table:
    r = mfp_optimize(spec.scenario, spec.mfp)
    rows = [[i, f_max, f_min] for i, (f_max, f_min) in enumerate(r.bound_trace)]
    return Table(["iteration", "f_max", "f_min"], rows, r.termination is not Termination.CONVERGED)


def comparison_table(spec: ExperimentSpec) -> Table:
    rep = rotor_energy_comparison(spec)
    header = [f.name for f in dataclasses.fields(ComparisonReport)]
    return Table(header, [[getattr(rep, name) for name in header]])


RUNNERS = {
    Experiment.SOLVE: solve_table,
    Experiment.ALTITUDE_SWEEP: altitude_sweep_table,
    Experiment.RATE_SWEEP: rate_sweep_table,
    Experiment.CONVERGENCE_TRACE: convergence_trace_table,
    Experiment.ROTOR_ENERGY_COMPARISON: comparison_table,
}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NONCONVERGENCE = 4


def build_table(spec: ExperimentSpec) -> Table:
    return RUNNERS[spec.experiment](spec)


def run(spec: ExperimentSpec, output_path: str | Path | None = None) -> int:
    """Run the experiment, write the CSV and a resolved-config echo next to it.

    Returns the process exit status. :class:`Infeasible` propagates for
    single-scenario experiments; sweeps record infeasible points as rows.
    """
    out = Path(output_path or spec.output_path or f"{spec.experiment.value}.csv")
    table = build_table(spec)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_csv(spec, table.header, table.rows))
    echo = out.with_name(out.name + ".config.json")
    echo.write_text(json.dumps(spec.resolved(), indent=2, sort_keys=True) + "\n")
    return EXIT_NONCONVERGENCE if table.nonconverged else EXIT_OK
