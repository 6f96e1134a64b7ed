"""Command-line entry point.

    msrm simulate [scenario.json]      run one scenario, write CSV + metrics JSON
    msrm compare [scenario.json]       run ABSM, SM and PD on the same scenario
    msrm check-impedance profile.json  certify an impedance profile
    msrm estimate-demo                 residual step response for several K_I

Errors are reported as a JSON object on stderr: exit 2 for bad input or
configuration, 1 for a failed run or a failed certificate.
"""
import argparse
import json
import os
import sys

import numpy as np

from .errors import CertificationError, ConfigError, DomainError, SimulationError
from .estimator import residual_reference, static_step_response
from .impedance import certify, default_time_grid, profile_from_dict
from .scenario import Scenario, load_scenario, validate
from .simulation import run_scenario

EXIT_FAILED = 1
EXIT_CONFIG = 2

COMPARED = ("ABSM", "SM", "PD")
METRIC_KEYS = ("iae", "itae", "ise")


class CLIError(Exception):
    def __init__(self, kind, message, status, **extra):
        super().__init__(message)
        self.payload = {"error": kind, "message": message, **extra}
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("usage", message, EXIT_CONFIG)


def _scenario_flags(p):
    p.add_argument("--out-dir")
    p.add_argument("--dt", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--controller", choices=("ABSM", "SM", "PD", "none"))
    p.add_argument("--impedance", choices=("variable", "invariable", "off"))
    p.add_argument("--pu", type=float, help="parametric uncertainty fraction")
    p.add_argument("--ki", type=float, help="estimator gain K_I")
    p.add_argument("--seed", type=int)


def build_parser():
    parser = _Parser(prog="msrm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("scenario", nargs="?", help="scenario JSON (defaults if omitted)")
    _scenario_flags(p)

    p = sub.add_parser("compare", help="run ABSM, SM and PD on one scenario")
    p.add_argument("scenario", nargs="?")
    _scenario_flags(p)

    p = sub.add_parser("check-impedance", help="certify an impedance profile")
    p.add_argument("profile")
    p.add_argument("--out-dir")

    p = sub.add_parser("estimate-demo", help="residual response to a step load")
    p.add_argument("--ki", type=float, nargs="+", default=[10.0, 100.0, 1000.0])
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--duration", type=float, default=0.5)
    p.add_argument("--load", type=float, nargs=4, default=[0.12, 0.0, 0.12, 0.0],
                   metavar="TAU", help="constant configuration-space load")
    p.add_argument("--out-dir", default="results")
    return parser


def _scenario_from_args(args):
    sc = load_scenario(args.scenario) if args.scenario else Scenario()
    changes = {key: val for key, val in (
        ("output_dir", args.out_dir), ("dt", args.dt), ("duration", args.duration),
        ("controller", args.controller), ("impedance", args.impedance),
        ("uncertainty", args.pu), ("ki", args.ki), ("seed", args.seed)) if val is not None}
    if "duration" in changes and args.scenario is None:
        # drop default pulses that would no longer fit
        changes["force_schedule"] = tuple(p for p in sc.force_schedule
                                          if p.end <= changes["duration"])
    return sc.with_(**changes) if changes else sc


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _simulate(scenario):
    try:
        return run_scenario(scenario)
    except SimulationError as exc:
        raise CLIError("simulation", str(exc), EXIT_FAILED, time=exc.time) from None


def _outputs(result, out_dir, stem):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(result.to_csv())
    doc = {"metrics": result.metrics.to_dict(), "alpha": result.alpha,
           "scenario": result.scenario.to_dict()}
    json_path = os.path.join(out_dir, f"{stem}_metrics.json")
    _write_json(json_path, doc)
    return csv_path, json_path


def cmd_simulate(args):
    sc = _scenario_from_args(args)
    res = _simulate(sc)
    csv_path, json_path = _outputs(res, sc.output_dir, f"{sc.name}_{sc.controller}")
    print(json.dumps({"csv": csv_path, "metrics": json_path, **res.metrics.to_dict()}))
    return 0


def compare_summary(metrics):
    """Table-style summary with the strict ordering check per metric."""
    rows = {m.controller: m.to_dict() for m in metrics}
    ordering = {key: all(rows[a][key] < rows[b][key]
                         for a, b in zip(COMPARED, COMPARED[1:]))
                for key in METRIC_KEYS}
    return {"controllers": rows, "ordering_absm_sm_pd": ordering,
            "iae_ratio_sm_over_absm": rows["SM"]["iae"] / rows["ABSM"]["iae"]}


def cmd_compare(args):
    base = _scenario_from_args(args)
    metrics = []
    for name in COMPARED:
        sc = base.with_(controller=name)
        res = _simulate(sc)
        _outputs(res, sc.output_dir, f"{sc.name}_{name}")
        metrics.append(res.metrics)
    summary = compare_summary(metrics)
    summary["scenario"] = base.to_dict()
    os.makedirs(base.output_dir, exist_ok=True)
    _write_json(os.path.join(base.output_dir, f"{base.name}_compare.json"), summary)
    print(json.dumps({k: summary[k] for k in ("controllers", "ordering_absm_sm_pd",
                                              "iae_ratio_sm_over_absm")}, indent=2))
    return 0


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


def cmd_check_impedance(args):
    doc = _read_json(args.profile)
    validate(doc, "profile.json")
    profile = profile_from_dict(doc)
    grid = default_time_grid(doc.get("horizon", 10.0), doc.get("spacing", 1e-3))
    try:
        rep = certify(profile, grid)
    except CertificationError as exc:
        raise CLIError("certification", str(exc), EXIT_FAILED,
                       time=exc.time, eigenvalue=exc.eigenvalue) from None
    out = {"profile": profile.name, **rep.to_dict()}
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        _write_json(os.path.join(args.out_dir, f"{profile.name}_stability.json"), out)
    print(json.dumps(out, indent=2))
    if not rep.passed:
        raise CLIError("certification", f"profile {profile.name!r} fails at alpha={rep.alpha}",
                       EXIT_FAILED, time=rep.violation_time,
                       eigenvalue=rep.violation_eigenvalue)
    return 0


def cmd_estimate_demo(args):
    load = np.array(args.load)
    if args.dt <= 0 or args.duration < args.dt:
        raise ConfigError("need dt > 0 and duration >= dt")
    columns, rows, summary = ["t"], None, []
    for ki in args.ki:
        if ki <= 0:
            raise ConfigError(f"K_I must be positive, got {ki}")
        t, r = static_step_response(load, ki, args.dt, args.duration)
        ref = residual_reference(load, ki, t[:, None])
        rows = [t] if rows is None else rows
        rows += [r[:, 0], r[:, 2]]
        columns += [f"r_kappa1_ki{ki:g}", f"r_kappa2_ki{ki:g}"]
        summary.append({"ki": ki,
                        "max_abs_error_vs_closed_form": float(np.abs(r - ref).max()),
                        "final_abs_error_vs_load": float(np.abs(r[-1] - load).max())})
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "estimate_demo.csv")
    np.savetxt(path, np.column_stack(rows), delimiter=",", header=",".join(columns),
               comments="", fmt="%.17g")
    print(json.dumps({"csv": path, "load": load.tolist(), "runs": summary}, indent=2))
    return 0


COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare,
            "check-impedance": cmd_check_impedance, "estimate-demo": cmd_estimate_demo}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except CLIError as exc:
        err = exc.payload
        status = exc.status
    except (ConfigError, DomainError) as exc:
        err = {"error": "config", "message": str(exc)}
        status = EXIT_CONFIG
    print(json.dumps(err), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
