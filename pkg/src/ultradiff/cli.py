"""ultradiff command line.

Exit status: 0 success, 1 identity check failed, 2 usage or configuration
error, 3 precision error. Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys

from . import __version__
from .calculus import CHECKS, dd_direct, dd_recursive, dq_iter, phi_k
from .domains import BallDomain, MultiIndex, member_bracket, parse_domain, split_phi
from .errors import DomainError, PrecisionError, UltradiffError
from .expr import Expr, format_expr, parse_expr
from .field import DEFAULT_PREC, check_prime, parse_series
from .regularity import c2_blowup_scan, c2_witness, counterexample_report, dd_boundedness_scan, holder_estimate

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3

GLOBALS = {
    "p": 2,
    "prec": DEFAULT_PREC,
    "seed": 0,
    "samples": 100,
    "format": "text",
    "domain": "O^d",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(name):
        return argparse.SUPPRESS if suppress else GLOBALS[name]

    g = parser.add_argument_group("global options")
    g.add_argument("--p", type=int, default=default("p"), help="field characteristic (prime)")
    g.add_argument("--prec", type=int, default=default("prec"), help="working precision N, results are mod X^N")
    g.add_argument("--seed", type=int, default=default("seed"))
    g.add_argument("--samples", type=int, default=default("samples"))
    g.add_argument("--format", choices=("text", "json", "csv"), default=default("format"))
    g.add_argument("--domain", default=default("domain"), help="O^d or ball(c,r;...)")


def _add_expr(parser) -> None:
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--expr", help="expression in x1..xd, [e1, ...] for vector values")
    src.add_argument("--expr-file", help="file holding the expression")
    parser.add_argument("--arity", type=int, help="number of variables (inferred when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ultradiff", description="Exact difference calculus over F_p((X)).")
    parser.add_argument("--version", action="version", version=f"ultradiff {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        _add_globals(sp, suppress=True)
        return sp

    sp = command("eval", "evaluate an expression at a point")
    _add_expr(sp)
    sp.add_argument("--at", required=True, help="point as semicolon-separated series literals")

    sp = command("dd", "divided difference f^>alpha<")
    _add_expr(sp)
    sp.add_argument("--alpha", required=True, help="multi-index, e.g. 1,1")
    sp.add_argument("--at", required=True, help="d + |alpha| series literals, block by block")
    sp.add_argument("--method", choices=("direct", "recursive"), default="direct")

    sp = command("dq", "iterated directional difference quotient f^[k]")
    _add_expr(sp)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--at", required=True, help="2^k (d+1) - 1 slots, layout (x, y, t) depth first")

    sp = command("phi", "Ludkovsky quotient Phi_k(f)")
    _add_expr(sp)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--at", required=True, help="x; xi_1..xi_k; t_1..t_k")

    sp = command("check", "run an identity check on sampled generic points")
    sp.add_argument("target", choices=tuple(CHECKS))
    _add_expr(sp)
    sp.add_argument("--alpha", help="multi-index (not used by fviaphi)")
    sp.add_argument("--beta", help="second multi-index, for simpfml")
    sp.add_argument("--min-sep", type=int, help="max valuation of within-block differences")

    sp = command("probe", "regularity probes")
    sp.add_argument("target", choices=("holder", "c2", "bcnorm"))
    sp.add_argument("--expr")
    sp.add_argument("--expr-file")
    sp.add_argument("--arity", type=int)
    sp.add_argument("--alpha", default="2", help="multi-index for bcnorm")
    sp.add_argument("--levels", default="2,4,6,8", help="separation levels m for bcnorm")
    sp.add_argument("--pin-c2", action="store_true", help="bcnorm: add (0, X^n, X^n + X^(n+3)) at level n+3")
    sp.add_argument("--n-max", type=int, default=20)

    sp = command("counterexample", "evidence for the floor(3k/2) map: Ludkovsky smooth, not C^2")
    sp.add_argument("--n-max", type=int, default=20)
    return parser


# ---------------------------------------------------------------------------
# configuration


def _validate(args) -> None:
    check_prime(args.p)
    if args.prec < 4:
        raise UsageError(f"--prec must be >= 4, got {args.prec}")
    if args.samples < 1:
        raise UsageError(f"--samples must be >= 1, got {args.samples}")
    if not -(1 << 63) <= args.seed < (1 << 64):
        raise UsageError("--seed must fit in 64 bits")


def _expr_text(args) -> str:
    if getattr(args, "expr_file", None):
        try:
            with open(args.expr_file, encoding="utf-8") as fh:
                return fh.read().strip()
        except OSError as exc:
            raise UsageError(f"cannot read {args.expr_file}: {exc.strerror}") from None
    if getattr(args, "expr", None) is None:
        raise UsageError("--expr or --expr-file is required")
    return args.expr


def _load(args) -> tuple[Expr, BallDomain]:
    text = _expr_text(args)
    arity = args.arity
    if arity is None and args.domain != "O^d":
        arity = parse_domain(args.domain, args.p, args.prec).d
    if arity is None:
        arity = max((int(m) for m in re.findall(r"\bx(\d+)", text)), default=1)
    domain_text = f"O^{arity}" if args.domain == "O^d" else args.domain
    U = parse_domain(domain_text, args.p, args.prec)
    if U.d != arity:
        raise UsageError(f"domain has dimension {U.d} but the expression takes {arity} variables")
    return parse_expr(text, arity), U


def _point(text: str, args) -> tuple:
    return tuple(parse_series(part, args.p, args.prec) for part in text.split(";"))


def _alpha(text, d: int) -> MultiIndex:
    if text is None:
        raise UsageError("--alpha is required")
    alpha = MultiIndex.parse(text)
    if alpha.d != d:
        raise UsageError(f"--alpha has {alpha.d} entries for {d} variables")
    return alpha


# ---------------------------------------------------------------------------
# emitters


def _emit(fmt: str, obj: dict, text_lines, csv_rows, out) -> None:
    if fmt == "json":
        out.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(csv_rows)
        out.write(buf.getvalue())
    else:
        out.write("\n".join(text_lines) + "\n")


def _value_report(op: str, args, f: Expr, point, value, out, **extra) -> int:
    obj = {"op": op, "field_p": args.p, "prec": args.prec, "expr": format_expr(f), **extra,
           "point": [str(z) for z in point], "value": [str(z) for z in value]}
    rows = [["component", "value"]] + [[i + 1, str(z)] for i, z in enumerate(value)]
    _emit(args.format, obj, [str(z) for z in value], rows, out)
    return EXIT_OK


def _table_rows(rows: list) -> list:
    if not rows:
        return [[]]
    header = list(rows[0])
    return [header] + [["" if r.get(k) is None else r.get(k) for k in header] for r in rows]


# ---------------------------------------------------------------------------
# commands


def cmd_eval(args, out) -> int:
    f, U = _load(args)
    point = _point(args.at, args)
    return _value_report("eval", args, f, point, f(point), out)


def cmd_dd(args, out) -> int:
    f, U = _load(args)
    alpha = _alpha(args.alpha, f.arity)
    point = _point(args.at, args)
    if len(point) != alpha.size:
        raise UsageError(f"alpha={alpha} needs {alpha.size} coordinates, got {len(point)}")
    for i, sl in enumerate(alpha.block_slices()):
        for z in point[sl]:
            if not U.contains_coord(i, z):
                raise DomainError(f"{z} is outside the domain in coordinate {i + 1}")
    op = dd_direct if args.method == "direct" else dd_recursive
    return _value_report("dd", args, f, point, op(f, alpha, point), out, alpha=list(alpha))


def cmd_dq(args, out) -> int:
    f, U = _load(args)
    z = _point(args.at, args)
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if not member_bracket(U, args.k, z):
        raise DomainError(f"point is not in U^[{args.k}]")
    return _value_report("dq", args, f, z, dq_iter(f, args.k, z), out, k=args.k)


def cmd_phi(args, out) -> int:
    f, U = _load(args)
    z = _point(args.at, args)
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    x, xis, ts = split_phi(z, args.k, f.arity)
    return _value_report("phi", args, f, z, phi_k(f, args.k, x, xis, ts, U), out, k=args.k)


def cmd_check(args, out) -> int:
    f, U = _load(args)
    check = CHECKS[args.target]
    if args.target == "fviaphi":
        report = check(f, U, args.samples, args.seed, args.prec)
    elif args.target == "simpfml":
        alpha = _alpha(args.alpha, f.arity)
        if args.beta is None:
            raise UsageError("--beta is required for simpfml")
        beta = MultiIndex.parse(args.beta)
        report = check(f, alpha, beta, U, args.samples, args.seed, args.prec, args.min_sep)
    else:
        report = check(f, _alpha(args.alpha, f.arity), U, args.samples, args.seed, args.prec, args.min_sep)
    lines = [f"{report.op}: {report.exact_matches}/{report.samples} exact matches "
             f"(p={report.field_p}, prec={report.prec}, seed={report.seed})"]
    for fail in report.failures:
        lines.append(f"  FAIL at {'; '.join(fail['point'])}: lhs={fail['lhs']} rhs={fail['rhs']}")
    rows = [["sample", "exact_match", "point"]]
    rows += [[i, int(ok), "; ".join(pt)] for i, (ok, pt) in enumerate(zip(report.outcomes, report.points))]
    _emit(args.format, report.to_dict(), lines, rows, out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_probe(args, out) -> int:
    if args.target == "c2":
        table = c2_blowup_scan(args.n_max, args.prec, args.p)
        obj = table.to_dict()
        lines = [f"n={r['n']:>3}  |f^>2<| = {r['abs']}" for r in table.rows] + [table.verdict]
        _emit(args.format, obj, lines, _table_rows(table.rows), out)
        return EXIT_OK
    f, U = _load(args)
    if args.target == "holder":
        report = holder_estimate(f, U, args.samples, args.prec, args.seed)
        params = {"expr": format_expr(f), "p": args.p, "prec": args.prec, "samples": args.samples, "seed": args.seed}
        obj = report.to_dict(params)
        slope = "-" if report.slope is None else str(report.slope)
        lines = [f"sigma = {report.sigma}", f"log_p C = {report.log_c}", f"deep slope = {slope}",
                 f"pairs = {len(report.pairs)} (excluded {report.excluded})", report.verdict]
        _emit(args.format, obj, lines, _table_rows(obj["rows"]), out)
        return EXIT_OK
    alpha = _alpha(args.alpha, f.arity)
    try:
        levels = [int(m) for m in args.levels.split(",") if m.strip()]
    except ValueError:
        raise UsageError(f"bad --levels {args.levels!r}") from None
    pinned = None
    if args.pin_c2:
        pinned = {n + 3: [c2_witness(n, args.p, args.prec)] for n in range(2, max(levels), 2) if n + 3 in levels}
    table = dd_boundedness_scan(f, alpha, U, args.samples, levels, args.seed, args.prec, pinned)
    lines = [f"m={r['level']:>3}  max |dd| = {r['max_abs']}  ({r['samples']} tuples, {r['undecided']} undecided)"
             for r in table.rows] + [table.verdict]
    _emit(args.format, table.to_dict(), lines, _table_rows(table.rows), out)
    return EXIT_OK


def cmd_counterexample(args, out) -> int:
    report = counterexample_report(args.n_max, args.samples, args.prec, args.seed, args.p)
    lines = [f"{r['subcheck']}: {r['passed']}/{r['cases']}  {r['detail']}" for r in report["rows"]]
    lines += [f"n={r['n']:>3}  |f^>2<| = {r['abs']}" for r in report["blowup"]]
    lines.append(report["verdict"])
    rows = [["subcheck", "cases", "passed", "detail"]]
    rows += [[r["subcheck"], r["cases"], r["passed"], r["detail"]] for r in report["rows"]]
    rows += [[f"c2_blowup[n={r['n']}]", 1, 1, r["abs"]] for r in report["blowup"]]
    _emit(args.format, report, lines, rows, out)
    complete = all(r["passed"] == r["cases"] for r in report["rows"])
    return EXIT_OK if complete else EXIT_CHECK_FAILED


COMMANDS = {
    "eval": cmd_eval,
    "dd": cmd_dd,
    "dq": cmd_dq,
    "phi": cmd_phi,
    "check": cmd_check,
    "probe": cmd_probe,
    "counterexample": cmd_counterexample,
}


def run_command(argv, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"ultradiff: error: {exc}\n")
        return EXIT_USAGE
    except PrecisionError as exc:
        err.write(f"ultradiff: precision: {exc}\n")
        return EXIT_PRECISION
    except (UltradiffError, ValueError) as exc:
        err.write(f"ultradiff: error: {exc}\n")
        return EXIT_USAGE


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
