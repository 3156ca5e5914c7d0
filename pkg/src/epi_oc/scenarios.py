"""Scenario orchestration: config files, presets, runs, sweeps, reports.

A scenario is either a fixed-control simulation (e.g. the no-control
baseline) or an optimal-control solve for one of the three intervention
cases. Sweeps repeat a scenario across values of one model parameter and
assemble a comparison table. All artifacts are plain CSV/JSON written with
deterministic formatting; figures are rendered next to them unless disabled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .control import (VALID_CASES, ControlGrid, SweepOptions, cost_functional,
                      forward_backward_sweep, integrate_state)
from .integrators import TimeGrid, adjoint_to_csv, trajectory_to_csv
from .model import DEFAULT_INITIAL_STATE, ModelParams, preset

DEFAULT_TF = 30.0
DEFAULT_DT = 0.03


class ConfigError(ValueError):
    """Bad configuration input; the message names the offending field."""


@dataclass(frozen=True)
class ScenarioSpec:
    """One runnable scenario: parameters, initial state, grid and mode."""

    params: ModelParams
    initial_state: tuple = DEFAULT_INITIAL_STATE
    tf: float = DEFAULT_TF
    dt: float = DEFAULT_DT
    case: int | None = None            # optimal-control case selector
    controls: tuple | None = None      # (u1, u2) constants for simulation
    sweep_param: str | None = None
    sweep_values: tuple | None = None
    u1_fixed: float = 1.0
    out: str | None = None

    def __post_init__(self):
        if self.case is not None and self.controls is not None:
            raise ConfigError("set exactly one of 'case' and 'controls', not both")
        if self.case is not None and self.case not in VALID_CASES:
            raise ConfigError(f"field case: must be one of {VALID_CASES}")
        if self.controls is not None:
            u1, u2 = self.controls
            if not (0.0 <= u1 <= self.params.u1max):
                raise ConfigError(f"field controls.u1: {u1} outside [0, {self.params.u1max}]")
            if not (0.0 <= u2 <= self.params.u2max):
                raise ConfigError(f"field controls.u2: {u2} outside [0, {self.params.u2max}]")
        if len(self.initial_state) != 5:
            raise ConfigError("field initial_state: expected 5 components (S, U1, U2, E, Z)")
        if any(not np.isfinite(v) or v < 0 for v in self.initial_state):
            raise ConfigError(f"field initial_state: nonnegative finite values required, got {self.initial_state}")
        if self.tf <= 0 or self.dt <= 0 or self.dt > self.tf:
            raise ConfigError(f"fields tf/dt: need 0 < dt <= tf, got tf={self.tf}, dt={self.dt}")
        if (self.sweep_param is None) != (self.sweep_values is None):
            raise ConfigError("fields sweep_param/sweep_values must be set together")
        if self.sweep_param is not None:
            if self.sweep_param not in ModelParams.field_names():
                raise ConfigError(f"field sweep.param: unknown parameter {self.sweep_param!r}")
            if len(self.sweep_values) == 0:
                raise ConfigError("field sweep.values: empty list")
            if any(not np.isfinite(v) for v in self.sweep_values):
                raise ConfigError("field sweep.values: all values must be finite")

    def grid(self) -> TimeGrid:
        return TimeGrid.from_dt(0.0, self.tf, self.dt)

    def mode(self) -> str:
        return "optimize" if self.case is not None else "simulate"


_CONFIG_KEYS = {"preset", "params", "overrides", "initial_state", "tf", "dt",
                "case", "controls", "sweep", "u1_fixed", "out"}


def params_from_config(doc: dict) -> ModelParams:
    try:
        if "params" in doc:
            if "preset" in doc:
                raise ConfigError("set either 'preset' or 'params', not both")
            base = ModelParams.from_dict(doc["params"])
        elif "preset" in doc:
            base = preset(doc["preset"])
        else:
            raise ConfigError("config needs a 'preset' name or a full 'params' table")
        overrides = doc.get("overrides", {})
        if overrides:
            unknown = set(overrides) - set(ModelParams.field_names())
            if unknown:
                raise ConfigError(f"field overrides: unknown parameter key(s) {sorted(unknown)}")
            base = base.replace(**{k: float(v) for k, v in overrides.items()})
        return base
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def spec_from_config(doc: dict) -> ScenarioSpec:
    """Build a ScenarioSpec from a parsed JSON document (strict keys)."""
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    params = params_from_config(doc)
    kwargs = dict(params=params)
    if "initial_state" in doc:
        kwargs["initial_state"] = tuple(float(v) for v in doc["initial_state"])
    if "tf" in doc:
        kwargs["tf"] = float(doc["tf"])
    if "dt" in doc:
        kwargs["dt"] = float(doc["dt"])
    if "case" in doc:
        kwargs["case"] = int(doc["case"])
    if "controls" in doc:
        c = doc["controls"]
        unknown = set(c) - {"u1", "u2"}
        if unknown:
            raise ConfigError(f"field controls: unknown key(s) {sorted(unknown)}")
        kwargs["controls"] = (float(c.get("u1", 0.0)), float(c.get("u2", 0.0)))
    if "sweep" in doc:
        s = doc["sweep"]
        unknown = set(s) - {"param", "values"}
        if unknown:
            raise ConfigError(f"field sweep: unknown key(s) {sorted(unknown)}")
        if "param" not in s or "values" not in s:
            raise ConfigError("field sweep: needs 'param' and 'values'")
        kwargs["sweep_param"] = str(s["param"])
        kwargs["sweep_values"] = tuple(float(v) for v in s["values"])
    if "u1_fixed" in doc:
        kwargs["u1_fixed"] = float(doc["u1_fixed"])
    if "out" in doc:
        kwargs["out"] = str(doc["out"])
    try:
        return ScenarioSpec(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> tuple:
    """Read a JSON config file; returns (ModelParams, ScenarioSpec)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    spec = spec_from_config(doc)
    return spec.params, spec


@dataclass(frozen=True)
class RunReport:
    """Per-run results plus the paths of every artifact written."""

    name: str
    mode: str                      # "simulate" or "optimize"
    case: int | None
    cost: float
    final_state: tuple
    peak_U1: float
    converged: bool
    iterations: int
    artifacts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "mode": self.mode, "case": self.case,
            "cost": self.cost, "final_state": list(self.final_state),
            "peak_U1": self.peak_U1, "converged": self.converged,
            "iterations": self.iterations, "artifacts": self.artifacts,
        }


@dataclass(frozen=True)
class ScenarioReport:
    """A sweep-level (or single-run) report: one entry per executed run."""

    runs: tuple
    sweep_param: str | None = None
    sweep_values: tuple | None = None
    failures: dict = field(default_factory=dict)

    def run_by_name(self, name: str) -> RunReport:
        for r in self.runs:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = {"runs": [r.to_dict() for r in self.runs]}
        if self.sweep_param is not None:
            d["sweep"] = {"param": self.sweep_param,
                          "values": list(self.sweep_values)}
        if self.failures:
            d["failures"] = {str(k): v for k, v in self.failures.items()}
        return d


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_scenario(spec: ScenarioSpec, out_dir=None, name: str = "run",
                 figures: bool = True,
                 sweep_opts: SweepOptions = SweepOptions()) -> RunReport:
    """Execute one scenario and write its artifacts.

    Dispatches on the spec mode: fixed constant controls integrate the
    controlled system directly; a case selector runs the forward-backward
    sweep. Identical inputs produce byte-identical CSV output.
    """
    grid = spec.grid()
    artifacts = {}
    out = Path(out_dir) if out_dir is not None else (
        Path(spec.out) if spec.out else None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    if spec.case is None:
        u1c, u2c = spec.controls if spec.controls is not None else (0.0, 0.0)
        controls = ControlGrid.constant(grid, u1c, u2c)
        state = integrate_state(spec.params, spec.initial_state, grid, controls)
        adjoint = None
        cost = cost_functional(state, controls, spec.params)
        converged, iterations, history = True, 0, []
    else:
        result = forward_backward_sweep(spec.params, spec.initial_state, grid,
                                        case=spec.case, opts=sweep_opts)
        state, adjoint, controls = result.state, result.adjoint, result.controls
        cost = result.cost
        converged = result.converged
        iterations = result.iterations
        history = [float(h) for h in result.convergence_history]

    if out is not None:
        trajectory_to_csv(state, out / "states.csv")
        artifacts["states"] = str(out / "states.csv")
        controls.to_csv(out / "controls.csv")
        artifacts["controls"] = str(out / "controls.csv")
        if adjoint is not None:
            adjoint_to_csv(adjoint, out / "adjoints.csv")
            artifacts["adjoints"] = str(out / "adjoints.csv")

    report = RunReport(
        name=name, mode=spec.mode(), case=spec.case, cost=cost,
        final_state=tuple(float(v) for v in state.final),
        peak_U1=float(np.max(state.values[:, 1])),
        converged=converged, iterations=iterations, artifacts=artifacts)

    if out is not None:
        summary = report.to_dict()
        # keep summaries location independent (and byte-identical across runs)
        summary["artifacts"] = {k: Path(v).name for k, v in artifacts.items()}
        summary["tf"] = spec.tf
        summary["dt"] = spec.dt
        summary["initial_state"] = list(spec.initial_state)
        summary["params"] = spec.params.to_dict()
        summary["convergence_history"] = history
        _write_json(summary, out / "summary.json")
        artifacts["summary"] = str(out / "summary.json")
        if figures:
            from . import plots
            paths = plots.render_run_figures(state, controls, adjoint, out)
            artifacts.update(paths)

    return report


def _value_tag(value: float) -> str:
    return format(value, "g").replace("-", "m").replace(".", "p")


def run_sweep(spec: ScenarioSpec, out_dir=None, figures: bool = True,
              sweep_opts: SweepOptions = SweepOptions()) -> ScenarioReport:
    """One run per swept parameter value, plus a comparison table.

    A failing point is recorded under its value and the sweep continues.
    """
    if spec.sweep_param is None:
        raise ConfigError("run_sweep needs a sweep axis (field sweep)")
    out = Path(out_dir) if out_dir is not None else (
        Path(spec.out) if spec.out else None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    runs = []
    failures = {}
    swept = []   # (value, RunReport) in execution order
    for value in spec.sweep_values:
        name = f"{spec.sweep_param}_{_value_tag(value)}"
        sub = out / name if out is not None else None
        try:
            params_i = spec.params.replace(**{spec.sweep_param: value})
            spec_i = ScenarioSpec(
                params=params_i, initial_state=spec.initial_state,
                tf=spec.tf, dt=spec.dt, case=spec.case, controls=spec.controls,
                u1_fixed=spec.u1_fixed)
            report = run_scenario(spec_i, out_dir=sub, name=name,
                                  figures=figures, sweep_opts=sweep_opts)
            runs.append(report)
            swept.append((value, report))
        except Exception as exc:  # record and continue with the next point
            failures[value] = f"{type(exc).__name__}: {exc}"

    report = ScenarioReport(runs=tuple(runs), sweep_param=spec.sweep_param,
                            sweep_values=spec.sweep_values, failures=failures)

    if out is not None:
        with open(out / "sweep_summary.csv", "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("param,value,cost,U1_final,peak_U1,converged,iterations\n")
            for value, run in swept:
                fh.write(f"{spec.sweep_param},{format(value, '.17g')},"
                         f"{format(run.cost, '.17g')},"
                         f"{format(run.final_state[1], '.17g')},"
                         f"{format(run.peak_U1, '.17g')},"
                         f"{int(run.converged)},{run.iterations}\n")
        _write_json(report.to_dict(), out / "sweep_report.json")
        if figures and swept:
            from . import plots
            plots.render_sweep_figure(spec.sweep_param, swept, out)
    return report
