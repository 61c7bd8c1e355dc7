"""Command-line interface.

Subcommands: solve, converge, compare, singularity, props.  A --config file
of key=value lines overrides flags.  Exit codes: 0 success, 2 configuration
error, 3 oracle unavailable.
"""

from __future__ import annotations

import argparse
import math
import sys

from .errors import ConfigurationError, OracleUnavailableError, Sl2OdeError
from .harness import (ExperimentReport, ProblemSpec, attach_csv_reference,
                      emit, run_comparison, run_convergence, run_problem,
                      run_property_suite, run_singularity, _oracle_callable)
from .oracles import SecondOrderExact, fit_constants


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ode", choices=["second_order", "third_order", "schwarzian"],
                   default="second_order")
    p.add_argument("--scheme", default="invariant_strict",
                   choices=["invariant_strict", "invariant_gamma",
                            "invariant_implicit", "standard_fd",
                            "standard_fd_explicit", "rk_reference"])
    p.add_argument("--gamma", type=float, default=None,
                   help="ODE coefficient (second order) or oracle gamma")
    p.add_argument("--alpha", type=float, default=None,
                   help="power-law coefficient of the third-order equation")
    p.add_argument("--C", type=float, default=None,
                   help="integration constant of the second-order closed form")
    p.add_argument("--f-const", type=float, default=0.0,
                   help="constant right side F(x) for the Schwarzian equation")
    p.add_argument("--ic", type=str, default=None,
                   help="comma list x0,y0[,yp0[,ypp0]]")
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--h-list", type=str, default=None, help="comma list of steps")
    p.add_argument("--x-max", type=float, default=1.0)
    p.add_argument("--max-steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--config", type=str, default=None,
                   help="key=value file overriding flags")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sl2ode")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("solve", "run one scheme and emit its trajectory"),
        ("converge", "endpoint-error convergence study over --h-list"),
        ("compare", "invariant vs standard error curves vs a reference"),
        ("singularity", "drive into a fold and report the estimate"),
        ("props", "randomized invariance/equivariance suite"),
    ]:
        p = sub.add_parser(name, help=help_)
        _add_common(p)
    return ap


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    try:
        with open(args.config) as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {args.config!r}: {e}") from e
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"bad config line {line!r} (want key=value)")
        key, value = (s.strip() for s in line.split("=", 1))
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigurationError(f"unknown config key {key!r}")
        current = getattr(args, attr)
        if isinstance(current, bool):
            value = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int) and not isinstance(current, bool):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        setattr(args, attr, value)


def _parse_ic(args) -> tuple:
    if args.ic is None:
        raise ConfigurationError("--ic is required for this command")
    try:
        return tuple(float(v) for v in args.ic.split(","))
    except ValueError as e:
        raise ConfigurationError(f"bad --ic {args.ic!r}: {e}") from e


def _parse_h_list(args) -> list[float]:
    if not args.h_list:
        return []
    return [float(v) for v in args.h_list.split(",")]


def _oracle_from_args(args, ic):
    if args.ode == "second_order":
        gamma = args.gamma if args.gamma is not None else 1.0
        C = args.C if args.C is not None else gamma
        return SecondOrderExact(gamma=gamma, C=C, y_b=0.0, branch="plus")
    if args.ode == "third_order":
        if args.alpha is None or len(ic) < 4:
            raise ConfigurationError("third_order oracle needs --alpha and 4-part --ic")
        return fit_constants(args.alpha, *ic[:4])
    return None


def _spec_from_args(args, ic, oracle=None, scheme=None, h=None) -> ProblemSpec:
    F = None
    if args.ode == "schwarzian":
        fc = args.f_const

        def F(x, _c=fc):
            return _c
    return ProblemSpec(
        ode=args.ode, scheme=scheme or args.scheme, ic=ic,
        h=h if h is not None else args.h, x_max=args.x_max,
        max_steps=args.max_steps, gamma=args.gamma, alpha=args.alpha,
        F=F, oracle=oracle)


def _emit_or_print(report: ExperimentReport, args) -> None:
    if args.out:
        files = emit(report, args.format, args.out)
        for f in files:
            print(f)
    else:
        from .harness import report_to_dict
        import json
        print(json.dumps(report_to_dict(report), sort_keys=True, indent=1,
                         allow_nan=False))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_config(args)
        if args.command == "props":
            report = run_property_suite(args.seed)
            _emit_or_print(report, args)
            return 0

        ic = _parse_ic(args)

        if args.command == "solve":
            spec = _spec_from_args(args, ic)
            traj = run_problem(spec)
            report = ExperimentReport(trajectories=[traj],
                                      meta={"spec": spec.echo(),
                                            "termination": traj.termination})
            _emit_or_print(report, args)
            return 0

        if args.command == "converge":
            oracle = _oracle_from_args(args, ic)
            spec = _spec_from_args(args, ic, oracle=oracle)
            h_list = _parse_h_list(args)
            report = run_convergence(spec, h_list)
            _emit_or_print(report, args)
            return 0

        if args.command == "compare":
            oracle = _oracle_from_args(args, ic) if args.ode == "second_order" else None
            inv_scheme = (args.scheme if args.scheme.startswith("invariant")
                          else ("invariant_gamma" if args.ode == "third_order"
                                else "invariant_strict"))
            specs = [
                _spec_from_args(args, ic, oracle=oracle, scheme=inv_scheme),
                _spec_from_args(args, ic, oracle=oracle, scheme="standard_fd"),
            ]
            report = run_comparison(specs)
            _emit_or_print(report, args)
            return 0

        if args.command == "singularity":
            oracle = _oracle_from_args(args, ic)
            spec = _spec_from_args(args, ic, oracle=oracle)
            spec.x_min = ic[0] * 0.5
            spec.x_max = math.inf if args.x_max == 1.0 else args.x_max
            report = run_singularity(spec)
            ref = _oracle_callable(spec)[0]
            if ref is not None:
                attach_csv_reference(report, ref)
            _emit_or_print(report, args)
            return 0

        raise ConfigurationError(f"unhandled command {args.command!r}")
    except OracleUnavailableError as e:
        print(f"oracle unavailable: {e}", file=sys.stderr)
        return 3
    except (ConfigurationError, Sl2OdeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
