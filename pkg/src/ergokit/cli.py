"""Command-line surface.

    ergokit classify MODEL [--nu V] [--budget K] [--format F] [--emit-curve]
    ergokit gap MODEL [--oracle N] [--L CUTOFF] [--budget K] [--format F]
    ergokit verify MODEL --y EXPR --lambda V [--H 0] [--N K]
    ergokit oracle MODEL --N K [--which l0|l1] [--L CUTOFF]

Model files are the `key = value` format described in ergokit.models.
Exit codes: 0 on any complete run, 1 on input errors, 2 when a
classification report contradicts its own implication lattice (an
internal error worth reporting).  The ERGOKIT_BUDGET environment
variable and the --budget flag multiply all probe budgets.  Output is
deterministic: identical inputs and flags give byte-identical bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import bd_criteria, bd_spectral, diffusion
from .expr import EvalDomainError, ExprSyntaxError, parse_expr
from .ladder import Budget, default_budget
from .models import BirthDeathModel, ModelFileError, PositivityError, load_model

__all__ = ["main"]


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _budget(args) -> Budget:
    base = default_budget()
    mult = getattr(args, "budget", 1) or 1
    return Budget(base.base, base.doublings, base.multiplier * mult)


def _rows_out(report, fmt: str, emit_curve: bool, out) -> None:
    order = report.order()
    if fmt == "text":
        out.write(f"model: {report.model_name}\n")
        width = max(len(r) for r in order) + 2
        for name in order:
            v = report.rows[name]
            quantity = _fmt(v.quantity) if v.quantity is not None else "-"
            flags = "; ".join(v.flags)
            probe = f"{len(v.probes)} probes" if v.probes else "-"
            line = f"  {name:<{width}} {v.outcome.value:<13} quantity={quantity:<24} {probe}"
            if flags:
                line += f"  [{flags}]"
            if v.detail:
                line += f"  ({v.detail})"
            out.write(line + "\n")
            if emit_curve:
                for x, val in v.probes:
                    out.write(f"    curve {name}: {_fmt(x)} {_fmt(val)}\n")
        for note in report.notes:
            out.write(f"  note: {note}\n")
        for c in report.contradictions:
            out.write(f"  CONTRADICTION: {c}\n")
    elif fmt == "csv":
        out.write("property,outcome,quantity,probe_count,last_horizon,last_value,flags\n")
        for name in order:
            v = report.rows[name]
            last_h, last_v = (v.probes[-1] if v.probes else ("", ""))
            out.write(f"{name},{v.outcome.value},{_fmt(v.quantity)},{len(v.probes)},"
                      f"{_fmt(last_h)},{_fmt(last_v)},{'; '.join(v.flags)}\n")
            if emit_curve:
                for x, val in v.probes:
                    out.write(f"curve,{name},{_fmt(x)},{_fmt(val)}\n")
    else:  # json-lines
        for name in order:
            v = report.rows[name]
            row = {"property": name, "outcome": v.outcome.value,
                   "probes": [[x, val] for x, val in v.probes],
                   "flags": list(v.flags)}
            if v.quantity is not None:
                row["quantity"] = v.quantity
            out.write(json.dumps(row, allow_nan=True) + "\n")


def _cmd_classify(args, out) -> int:
    model = load_model(args.model)
    budget = _budget(args)
    if isinstance(model, BirthDeathModel):
        report = bd_criteria.classify(model, nu=args.nu, budget=budget)
    else:
        report = diffusion.criteria_diff(model, nu=args.nu, budget=budget)
    _rows_out(report, args.format, args.emit_curve, out)
    return 2 if report.contradictions else 0


def _gap_row(args):
    model = load_model(args.model)
    budget = _budget(args)
    if isinstance(model, BirthDeathModel):
        est = bd_spectral.gap_bounds_bd(model, budget=budget, with_variational=True,
                                        oracle_n=args.oracle)
        return model, est.delta, est.lower, est.upper, est.variational_lower, \
            est.oracle_value, est.oracle_error
    est = diffusion.gap_bounds_diff(model, which=args.which, budget=budget)
    var_low = oracle = err = None
    if est.status == "finite":
        var_low = diffusion.variational_lower_diff(
            model, diffusion.representative_f(model, budget), budget=budget).value
    if args.oracle is not None:
        cutoff = args.cutoff if args.cutoff is not None else _auto_cutoff(model, budget)
        res = diffusion.fd_gap_oracle(model, cutoff, args.oracle, which=args.which,
                                      budget=budget)
        oracle, err = res.value, res.error_estimate
    return model, est.delta, est.lower, est.upper, var_low, oracle, err


def _auto_cutoff(model, budget) -> float:
    kit = diffusion.kit_for(model, budget)
    mass = kit.mass_verdict()
    if not mass.holds:
        raise ValueError("cannot choose a cutoff: the stationary mass is not decided finite")
    tails = kit.log_mtail_knots() - math.log(mass.quantity)
    ok = tails < math.log(1e-9)
    if not ok.any():
        raise ValueError("no cutoff with negligible stationary tail; pass --L")
    import numpy as np
    return float(kit.knots[int(np.argmax(ok))])


def _cmd_gap(args, out) -> int:
    model, delta, lower, upper, var_low, oracle, err = _gap_row(args)
    if args.format == "csv":
        out.write("model,kind,delta,lower,upper,var_lower,oracle,oracle_err\n")
        out.write(",".join([model.name, model.kind] +
                           [_fmt(v) for v in (delta, lower, upper, var_low, oracle, err)]) + "\n")
    elif args.format == "json-lines":
        out.write(json.dumps({"model": model.name, "kind": model.kind, "delta": delta,
                              "lower": lower, "upper": upper, "var_lower": var_low,
                              "oracle": oracle, "oracle_err": err}, allow_nan=True) + "\n")
    else:
        out.write(f"model: {model.name} ({model.kind})\n")
        out.write(f"  delta       = {_fmt(delta)}\n")
        out.write(f"  lower bound = {_fmt(lower)}   ((4 delta)^-1)\n")
        out.write(f"  upper bound = {_fmt(upper)}   (delta^-1)\n")
        out.write(f"  variational = {_fmt(var_low)}\n")
        if oracle is not None:
            out.write(f"  oracle      = {_fmt(oracle)} +- {_fmt(err)}\n")
    return 0


def _cmd_verify(args, out) -> int:
    model = load_model(args.model)
    if not isinstance(model, BirthDeathModel):
        raise ModelFileError("verify works on birth-death models only")
    y_expr = parse_expr(args.y, var="n")
    h_set = frozenset(int(t) for t in args.H.split(","))
    verdict = bd_criteria.verify_test_sequence(
        model, lambda i: y_expr(float(i)), lam=args.lam, h_set=h_set, n=args.N)
    out.write(f"model: {model.name}\n")
    out.write(f"  system: {'ergodicity (lambda = 0)' if args.lam == 0 else f'exponential ergodicity (lambda = {args.lam!r})'}\n")
    out.write(f"  verdict: {verdict.outcome.value}\n")
    out.write(f"  worst residual: {_fmt(verdict.quantity)}\n")
    out.write(f"  {verdict.detail}\n")
    return 0


def _cmd_oracle(args, out) -> int:
    model = load_model(args.model)
    budget = _budget(args)
    if isinstance(model, BirthDeathModel):
        boundary = "reflecting" if args.which == "l1" else "absorbing"
        res = bd_spectral.truncated_gap_oracle(model, args.N, boundary, budget=budget)
        out.write(f"model: {model.name} (birth-death, {boundary}, N={res.n})\n")
        out.write(f"  eigenvalue = {_fmt(res.value)} +- {_fmt(res.error_estimate)}\n")
    else:
        cutoff = args.cutoff if args.cutoff is not None else _auto_cutoff(model, budget)
        res = diffusion.fd_gap_oracle(model, cutoff, args.N, which=args.which, budget=budget)
        out.write(f"model: {model.name} (diffusion, {args.which}, L={_fmt(res.cutoff)}, "
                  f"N={res.n})\n")
        out.write(f"  eigenvalue = {_fmt(res.value)} +- {_fmt(res.error_estimate)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ergokit",
        description="Ergodicity classification and spectral-gap bounds for "
                    "birth-death chains and one-dimensional diffusions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("model", help="model file (key = value lines)")
        sp.add_argument("--budget", type=int, default=1, metavar="K",
                        help="probe budget multiplier (default 1; "
                             "ERGOKIT_BUDGET multiplies as well)")
        sp.add_argument("--format", choices=("text", "csv", "json-lines"),
                        default="text", help="output format (default text)")

    sp = sub.add_parser("classify", help="evaluate every criterion row")
    common(sp)
    sp.add_argument("--nu", type=float, default=None,
                    help="evaluate the Nash row at this nu (> 2); omitted otherwise")
    sp.add_argument("--emit-curve", action="store_true",
                    help="dump (horizon, value) probe pairs per row")
    sp.set_defaults(fn=_cmd_classify)

    sp = sub.add_parser("gap", help="delta and the two-sided gap bracket")
    common(sp)
    sp.add_argument("--oracle", type=int, default=None, metavar="N",
                    help="also run the truncation oracle at size N")
    sp.add_argument("--L", dest="cutoff", type=float, default=None,
                    help="diffusion cutoff for the oracle (default: auto)")
    sp.add_argument("--which", choices=("l0", "l1"), default="l1",
                    help="diffusion eigenvalue to bound (default l1)")
    sp.set_defaults(fn=_cmd_gap)

    sp = sub.add_parser("verify", help="check a test sequence up to a horizon")
    common(sp)
    sp.add_argument("--y", required=True, help="test sequence as an expression in n")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0,
                    help="rate parameter (0 selects the ergodicity system)")
    sp.add_argument("--H", default="0", help="comma-separated finite set (default 0)")
    sp.add_argument("--N", type=int, default=1000, help="verification horizon")
    sp.set_defaults(fn=_cmd_verify)

    sp = sub.add_parser("oracle", help="brute-force truncation eigenvalue")
    common(sp)
    sp.add_argument("--N", type=int, required=True, help="truncation / grid size")
    sp.add_argument("--which", choices=("l0", "l1"), default="l1",
                    help="l1 = spectral gap (reflecting), l0 = Dirichlet value")
    sp.add_argument("--L", dest="cutoff", type=float, default=None,
                    help="diffusion cutoff (default: auto)")
    sp.set_defaults(fn=_cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args, sys.stdout)
    except (ModelFileError, ExprSyntaxError, EvalDomainError, PositivityError,
            ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
