"""Command line interface.

    epi-oc simulate|equilibria|stability|sensitivity|optimize|sweep [flags]

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .equilibria import (basic_reproduction_number, drug_free_equilibrium,
                         endemic_equilibrium, next_generation)
from .model import ModelParams, PRESET_NAMES, preset
from .scenarios import (ConfigError, ScenarioSpec, load_config, run_scenario,
                        run_sweep)
from .sensitivity import report_to_csv, sensitivity_indices
from .stability import (dfe_local_stability, endemic_local_stability,
                        global_stability_condition)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3

DEFAULT_OUT = "epi-oc-out"


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="epi-oc",
        description="Heroin-epidemic model: simulation, equilibria, "
                    "stability, sensitivity and optimal control.")
    ap.add_argument("--version", action="version", version=f"epi-oc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--config", type=str, default=None,
                       help="JSON config file (strict keys)")
        p.add_argument("--preset", type=str, default=None, choices=PRESET_NAMES,
                       help="built-in parameter table")
        p.add_argument("--tf", type=float, default=None, help="final time (days)")
        p.add_argument("--dt", type=float, default=None, help="time step (days)")
        p.add_argument("--out", type=str, default=out_default,
                       help="output directory for artifacts")
        p.add_argument("--u1-fixed", type=float, default=None, dest="u1_fixed",
                       help="constant response intensity of the uncontrolled "
                            "model (default 1.0)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering PNG figures")

    p = sub.add_parser("simulate", help="integrate the model under fixed controls")
    common(p, out_default=DEFAULT_OUT)
    p.add_argument("--u1", type=float, default=None, help="constant u1 (default 0)")
    p.add_argument("--u2", type=float, default=None, help="constant u2 (default 0)")

    p = sub.add_parser("equilibria", help="R0, drug-free and endemic points")
    common(p)

    p = sub.add_parser("stability", help="Routh-Hurwitz verdicts per equilibrium")
    common(p)

    p = sub.add_parser("sensitivity", help="normalized sensitivity indices of R0")
    common(p)

    p = sub.add_parser("optimize", help="forward-backward sweep for one case")
    common(p, out_default=DEFAULT_OUT)
    p.add_argument("--case", type=int, default=3, choices=(1, 2, 3),
                   help="1: prevention only, 2: treatment only, 3: both")

    p = sub.add_parser("sweep", help="repeat a scenario across parameter values")
    common(p, out_default=DEFAULT_OUT)
    p.add_argument("--case", type=int, default=None, choices=(1, 2, 3))
    p.add_argument("--u1", type=float, default=None)
    p.add_argument("--u2", type=float, default=None)
    p.add_argument("--sweep", type=str, default=None, metavar="PARAM=v1,v2,...",
                   help="parameter axis, e.g. rho=0.02,0.04,0.08")
    return ap


def _resolve_spec(args, mode: str) -> ScenarioSpec:
    """Merge config file and CLI flags into a runnable ScenarioSpec."""
    if args.config:
        _, spec = load_config(args.config)
    elif args.preset:
        spec = ScenarioSpec(params=preset(args.preset))
    else:
        raise ConfigError("provide --preset or --config")
    if args.config and args.preset:
        spec = ScenarioSpec(**{**_spec_kwargs(spec), "params": preset(args.preset)})

    kw = _spec_kwargs(spec)
    if args.tf is not None:
        kw["tf"] = args.tf
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.u1_fixed is not None:
        kw["u1_fixed"] = args.u1_fixed
    if args.out is not None:
        kw["out"] = args.out

    if mode == "simulate":
        u1 = args.u1 if args.u1 is not None else (
            spec.controls[0] if spec.controls else 0.0)
        u2 = args.u2 if args.u2 is not None else (
            spec.controls[1] if spec.controls else 0.0)
        kw["case"] = None
        kw["controls"] = (u1, u2)
    elif mode == "optimize":
        kw["case"] = args.case
        kw["controls"] = None
    elif mode == "sweep":
        if args.sweep is not None:
            try:
                name, values = args.sweep.split("=", 1)
                kw["sweep_param"] = name.strip()
                kw["sweep_values"] = tuple(float(v) for v in values.split(","))
            except ValueError as exc:
                raise ConfigError(f"--sweep expects PARAM=v1,v2,... ({exc})") from exc
        if kw.get("sweep_param") is None:
            raise ConfigError("sweep needs --sweep PARAM=v1,v2,... or a config sweep")
        if args.case is not None:
            kw["case"] = args.case
            kw["controls"] = None
        elif args.u1 is not None or args.u2 is not None:
            kw["case"] = None
            kw["controls"] = (args.u1 or 0.0, args.u2 or 0.0)
        elif kw.get("case") is None and kw.get("controls") is None:
            kw["case"] = 3
    try:
        return ScenarioSpec(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _spec_kwargs(spec: ScenarioSpec) -> dict:
    return dict(params=spec.params, initial_state=spec.initial_state,
                tf=spec.tf, dt=spec.dt, case=spec.case, controls=spec.controls,
                sweep_param=spec.sweep_param, sweep_values=spec.sweep_values,
                u1_fixed=spec.u1_fixed, out=spec.out)


def _params_only(args) -> tuple:
    spec = None
    if args.config:
        _, spec = load_config(args.config)
        params = spec.params
    elif args.preset:
        params = preset(args.preset)
    else:
        raise ConfigError("provide --preset or --config")
    u1_fixed = args.u1_fixed if args.u1_fixed is not None else (
        spec.u1_fixed if spec else 1.0)
    return params, u1_fixed


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _maybe_write(payload: dict, out, filename: str) -> None:
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / filename, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _equilibria_payload(params: ModelParams, u1_fixed: float) -> dict:
    ng = next_generation(params)
    points = endemic_equilibrium(params, u1_fixed)
    return {
        "R0": basic_reproduction_number(params),
        "R0_spectral_radius": ng.R0,
        "Q1": ng.Q1,
        "Q2": ng.Q2,
        "dfe": list(drug_free_equilibrium(params)),
        "endemic": [{
            "state": list(eq.state()),
            "descartes_case": eq.descartes_case,
            "cubic_coeffs": list(eq.cubic_coeffs),
            "multiplicity": eq.multiplicity,
        } for eq in points],
    }


def _verdict_payload(v) -> dict:
    return {
        "point_kind": v.point_kind,
        "rh_holds": v.rh_holds,
        "max_re_eig": v.max_re_eig,
        "eigenvalues": [[float(e.real), float(e.imag)] for e in v.eigenvalues],
        "conditions": {k: float(val) for k, val in v.conditions.items()},
    }


def _stability_payload(params: ModelParams, u1_fixed: float) -> dict:
    value, holds = global_stability_condition(params)
    verdicts = [_verdict_payload(dfe_local_stability(params, u1_fixed))]
    for eq in endemic_equilibrium(params, u1_fixed):
        v = _verdict_payload(endemic_local_stability(params, eq, u1_fixed))
        v["equilibrium"] = list(eq.state())
        verdicts.append(v)
    return {
        "R0": basic_reproduction_number(params),
        "global_condition_value": value,
        "global_condition_holds": holds,
        "verdicts": verdicts,
    }


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            spec = _resolve_spec(args, "simulate")
            report = run_scenario(spec, out_dir=args.out, name="simulate",
                                  figures=not args.no_figures)
            _print_json(report.to_dict())
            return EXIT_OK

        if args.command == "equilibria":
            params, u1_fixed = _params_only(args)
            payload = _equilibria_payload(params, u1_fixed)
            _print_json(payload)
            _maybe_write(payload, args.out, "equilibria.json")
            return EXIT_OK

        if args.command == "stability":
            params, u1_fixed = _params_only(args)
            payload = _stability_payload(params, u1_fixed)
            _print_json(payload)
            _maybe_write(payload, args.out, "stability.json")
            return EXIT_OK

        if args.command == "sensitivity":
            params, _ = _params_only(args)
            report = sensitivity_indices(params)
            sys.stdout.write("param,derivative,index,sign\n")
            for e in report.entries:
                sys.stdout.write(
                    f"{e.param},{format(e.derivative, '.17g')},"
                    f"{format(e.index, '.17g')},{e.sign:+d}\n")
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                report_to_csv(report, Path(args.out) / "sensitivity.csv")
            return EXIT_OK

        if args.command == "optimize":
            spec = _resolve_spec(args, "optimize")
            report = run_scenario(spec, out_dir=args.out,
                                  name=f"case{spec.case}",
                                  figures=not args.no_figures)
            _print_json(report.to_dict())
            return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE

        if args.command == "sweep":
            spec = _resolve_spec(args, "sweep")
            report = run_sweep(spec, out_dir=args.out,
                               figures=not args.no_figures)
            _print_json(report.to_dict())
            ok = not report.failures and all(r.converged for r in report.runs)
            return EXIT_OK if ok else EXIT_NO_CONVERGENCE

        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
