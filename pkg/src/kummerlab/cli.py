"""Command-line entry point.

One executable with subcommands; every numeric report is JSON (plus CSV
residual tables next to the JSON output where applicable).  Exit codes:
0 success, 1 input error (bad file, bad schema, bad flags), 2 numerical
tolerance failure with the report still written.
"""

import argparse
import sys

import numpy as np

from . import jsonio
from .errors import HierarchyAbort, ToleranceFailure, ValidationError
from .hierarchy import default_samples, make_state, premise_check, run_hierarchy
from .kummer import basis_for, kummer
from .scenarios import (
    degenerate_fay_configuration,
    fay_configuration,
    find_theta_divisor_point,
)
from .secant import (
    SearchOptions,
    involution_identity,
    propagation_secant_check,
    secant_coefficients,
    secant_residual,
    secant_search,
)
from .theta import theta
from .util import rng


def _divisor_seeds(seed, count):
    gen = rng(seed, 0xCE)
    return [int(s) for s in gen.integers(2**62, size=count)]

DEFAULT_EPS = 1e-12
DEFAULT_TOL = 1e-8


def _write(args, payload, csv_text=None):
    if args.output:
        with open(args.output, "w") as fh:
            jsonio.dump(payload, fh)
        if csv_text is not None:
            with open(args.output + ".csv", "w") as fh:
                fh.write(csv_text)
    else:
        jsonio.dump(payload, sys.stdout)
        if csv_text is not None:
            sys.stdout.write(csv_text)


def _load_pm(args):
    if not args.tau:
        raise ValidationError("--tau is required for this command")
    return jsonio.load_period_matrix(args.tau)


def _load_input(args):
    if not args.input:
        raise ValidationError("--input is required for this command")
    return jsonio.load_json(args.input)


def cmd_theta(args):
    pm = _load_pm(args)
    obj = _load_input(args)
    z = jsonio.point_from_json(obj, pm.g, args.input, "z")
    value = theta(pm, z, eps=args.eps)
    _write(args, {"value": jsonio.scalar_to_json(value), "eps": args.eps})
    return 0


def cmd_kummer(args):
    pm = _load_pm(args)
    obj = _load_input(args)
    z = jsonio.point_from_json(obj, pm.g, args.input, "z")
    pt = kummer(basis_for(pm), z, eps=args.eps)
    _write(args, jsonio.projective_point_to_json(pt))
    return 0


def cmd_secant_check(args):
    pm = _load_pm(args)
    cfg = jsonio.config_from_json(_load_input(args), pm, args.input)
    secant_residual(cfg, eps=args.eps)
    code = 0
    if cfg.residual <= args.tol:
        try:
            secant_coefficients(cfg, eps=args.eps, tol=args.tol)
        except ToleranceFailure:
            pass
    else:
        code = 2
    _write(args, jsonio.config_to_json(cfg))
    return code


def cmd_secant_search(args):
    pm = _load_pm(args)
    cfg = jsonio.config_from_json(_load_input(args), pm, args.input)
    opts = SearchOptions(seed=args.seed, eps=args.eps)
    result = secant_search(pm, cfg.m, cfg.points, cfg.zeta, opts)
    payload = jsonio.config_to_json(result)
    payload["search"] = {
        "iterations": result.search_info["iterations"],
        "converged": result.search_info["converged"],
    }
    _write(args, payload)
    return 0 if result.residual <= args.tol else 2


def cmd_secant_propagate(args):
    pm = _load_pm(args)
    obj = _load_input(args)
    cfg = jsonio.config_from_json(obj.get("config", obj), pm, args.input)
    if "zeta_prime" not in obj:
        raise ValidationError(f"{args.input}: missing field 'zeta_prime'")
    zeta_prime = jsonio.point_from_json(obj["zeta_prime"], pm.g, args.input, "zeta_prime")
    try:
        check = propagation_secant_check(cfg, zeta_prime, eps=args.eps, tol=args.tol)
    except ToleranceFailure as exc:
        table = getattr(exc, "table", [])
        payload = {"passed": False, "message": str(exc)}
        _write(args, payload, csv_text=jsonio.residual_table_csv(table))
        return 2
    payload = {
        "passed": True,
        "best_lift": jsonio.bits_to_str(check.best_lift),
        "best_residual": check.best_residual,
    }
    _write(args, payload, csv_text=jsonio.residual_table_csv(check.table))
    return 0


def cmd_involution(args):
    pm = _load_pm(args)
    obj = _load_input(args)
    pts = [
        jsonio.point_from_json(p, pm.g, args.input, f"points[{i}]")
        for i, p in enumerate(obj.get("points", []))
    ]
    zeta_prime = jsonio.point_from_json(obj.get("zeta_prime", {}), pm.g, args.input, "zeta_prime")
    if args.lift is not None:
        lift = jsonio.str_to_bits(args.lift, 2 * pm.g)
    elif "lift" in obj:
        lift = np.asarray(obj["lift"], dtype=np.int64)
    else:
        lift = np.zeros(2 * pm.g, dtype=np.int64)
    residual = involution_identity(pm, pts, zeta_prime, lift)
    _write(args, {"residual": residual})
    return 0 if residual <= args.tol else 2


def cmd_hierarchy_run(args):
    pm = _load_pm(args)
    m, u, b, w1 = jsonio.hierarchy_seed_from_json(_load_input(args), pm, args.input)
    state = make_state(pm, m, u, b, order=args.order, w1=w1)
    samples = default_samples(pm, args.samples, args.seed)
    code = 0
    try:
        run_hierarchy(state, args.order, samples, eps=args.eps)
    except HierarchyAbort as exc:
        state = exc.state
        code = 2
    _write(args, jsonio.hierarchy_state_to_json(state), csv_text=jsonio.hierarchy_csv(state))
    return code


def cmd_premise_check(args):
    pm = _load_pm(args)
    m, u, b, w1 = jsonio.hierarchy_seed_from_json(_load_input(args), pm, args.input)
    report = premise_check(pm, m, u, b, eps=args.eps, direction=w1)
    payload = {
        "tangency_residual": report.tangency_residual,
        "shifted_residuals": report.shifted_residuals,
        "passed": report.passed,
    }
    _write(args, payload)
    return 0 if report.passed else 2


def cmd_scenario_fay(args):
    pm = _load_pm(args)
    pts = [find_theta_divisor_point(pm, s) for s in _divisor_seeds(args.seed, 4)]
    try:
        result = fay_configuration(pm, pts, eps=args.eps)
    except ToleranceFailure as exc:
        table = getattr(exc, "table", [])
        _write(args, {"passed": False, "message": str(exc)}, csv_text=jsonio.fay_table_csv(table))
        return 2
    _write(args, jsonio.config_to_json(result.config))
    return 0


def cmd_scenario_degenerate(args):
    pm = _load_pm(args)
    pts = [find_theta_divisor_point(pm, s) for s in _divisor_seeds(args.seed, 3)]
    try:
        datum = degenerate_fay_configuration(pm, pts, eps=args.eps)
    except ToleranceFailure as exc:
        table = getattr(exc, "table", [])
        _write(
            args, {"passed": False, "message": str(exc)}, csv_text=jsonio.residual_table_csv(table)
        )
        return 2
    payload = jsonio.hierarchy_seed_to_json(
        1, datum.u, [datum.b], datum.direction, extra={"tangency_residual": datum.residual}
    )
    _write(args, payload)
    return 0


_COMMANDS = {
    "theta": cmd_theta,
    "kummer": cmd_kummer,
    "secant-check": cmd_secant_check,
    "secant-search": cmd_secant_search,
    "secant-propagate": cmd_secant_propagate,
    "involution": cmd_involution,
    "hierarchy-run": cmd_hierarchy_run,
    "premise-check": cmd_premise_check,
    "scenario-fay": cmd_scenario_fay,
    "scenario-degenerate": cmd_scenario_degenerate,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kummerlab",
        description="Theta functions, Kummer secant planes, and the elimination hierarchy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} operation")
        p.add_argument("--tau", metavar="PATH", help="period matrix JSON file")
        p.add_argument("--input", metavar="PATH", help="operation input JSON file")
        p.add_argument("--eps", type=float, default=DEFAULT_EPS, help="evaluation accuracy")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="acceptance tolerance")
        p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
        p.add_argument("--samples", type=int, default=64, help="sample count for solves/checks")
        p.add_argument("--order", type=int, default=4, help="hierarchy truncation order")
        p.add_argument("--lift", metavar="BITS", help="half-period lift as 2g bits")
        p.add_argument("--output", metavar="PATH", help="write JSON here (default stdout)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.eps <= 0 or args.tol <= 0 or args.eps >= args.tol:
            raise ValidationError(f"need 0 < eps < tol, got eps={args.eps}, tol={args.tol}")
        if args.order < 1 or args.order > 12:
            raise ValidationError("order must lie in 1..12")
        if args.samples < 1:
            raise ValidationError("samples must be >= 1")
        return _COMMANDS[args.command](args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ToleranceFailure as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
