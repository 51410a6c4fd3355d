"""Command-line front end.

    werden diff EXPR [--var x]
    werden ddiff EXPR [--var x] [--order K]
    werden nderiv EXPR [--var x] [--n 2] [--order K]
    werden restore EXPR [--var x]
    werden integrate EXPR --a A --b B [--N 1000]
    werden hypo EXPR --a A --b B [--N 1000] --drop "i,j,k"
    werden verify [CORPUS]

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 domain error or no restoring rule.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .calculus import (
    classical_nth_derivative,
    dynamic_differential,
    nth_dynamic_series,
    oracle_report,
)
from .corpus import load_corpus
from .errors import (
    CompositionError,
    DomainError,
    ExpressionSyntaxError,
    IndexOutOfRange,
    NoRuleApplies,
    NonAffineInner,
    ValidationError,
    WerdenError,
)
from .expr import parse, to_string
from .integrate import (
    Partition,
    SumReport,
    convergence_study,
    hypo_sum,
    newton_leibniz,
    static_sum,
    study_csv,
)
from .restore import restore
from .verify import run_suites

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_DOMAIN = 0, 1, 2, 3
STUDY_DECADES = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--var", default="x", help="variable name (default x)")
    common.add_argument("--order", type=int, default=4, dest="K",
                        help="truncation order K for transcendental expansions (default 4)")
    common.add_argument("--n", type=int, default=2, dest="n", help="derivative order for nderiv")
    common.add_argument("--a", type=float, default=0.0, help="lower limit")
    common.add_argument("--b", type=float, default=1.0, help="upper limit")
    common.add_argument("--N", type=int, default=1000, dest="N", help="subinterval count")
    common.add_argument("--drop", default="", help='dropped subinterval indices, e.g. "1,5,9"')
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=42)

    parser = _Parser(prog="werden", description="Werden calculus engine")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb, text in [
        ("diff", "static derivative, checked against the classical rules"),
        ("ddiff", "dynamic differential and derivative"),
        ("nderiv", "n-th dynamic derivative over generators d1x..dnx"),
        ("restore", "family of primitive functions"),
        ("integrate", "static sum against the Newton-Leibniz value"),
        ("hypo", "static sum with dropped terms"),
    ]:
        p = sub.add_parser(verb, parents=[common], help=text)
        p.add_argument("expression")
    p = sub.add_parser("verify", parents=[common], help="run every invariant suite on a corpus")
    p.add_argument("corpus", nargs="?", default=None)
    return parser


def _validate(args) -> None:
    if args.K < 1:
        raise ValidationError("--order must be >= 1")
    if args.n < 1:
        raise ValidationError("--n must be >= 1")
    if args.N < 1:
        raise ValidationError("--N must be >= 1")
    if args.a > args.b:
        raise ValidationError("--a must not exceed --b")
    args.dropped = []
    if args.drop.strip():
        try:
            args.dropped = sorted({int(tok) for tok in args.drop.split(",") if tok.strip()})
        except ValueError:
            raise ValidationError(f"--drop expects comma-separated integers, got {args.drop!r}")
    if len(args.dropped) > args.N:
        raise ValidationError("more dropped indices than subintervals")


def _kv_csv(pairs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for k, v in pairs:
        w.writerow([k, v if not isinstance(v, (list, dict)) else json.dumps(v)])
    return buf.getvalue()


def _emit(fmt: str, data: dict, text: str) -> str:
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt == "csv":
        return _kv_csv(data.items())
    return text + "\n"


def _o_term(dd, shift: int = 0) -> str:
    """Order of the dropped tail, for truncated expansions."""
    if dd.series.exact:
        return ""
    g = dd.generators[0].name
    return f" + O({g}^{dd.series.total_cap + 1 - shift})"


def cmd_diff(args) -> str:
    rep = oracle_report(args.expression, args.var, args.K, args.tol, args.seed)
    v = args.var
    text = "\n".join([
        f"F({v}) = {rep.input}",
        f"F'({v}) = {rep.static}",
        f"classical: {rep.oracle}  [{rep.verdict}, max abs err {rep.max_abs_err:.3g}]",
    ])
    return _emit(args.format, rep.to_json(), text)


def cmd_ddiff(args) -> str:
    dd = dynamic_differential(args.expression, args.var, args.K)
    v, g = args.var, dd.generators[0].name
    o = _o_term(dd)
    F = to_string(parse(args.expression))
    static = to_string(dd.static_part)
    lines = [
        f"F({v}) = {F}",
        f"dy = {dd.series.format()}{o}",
        f"F^o({v}) = {dd.quotient().format()}{_o_term(dd, 1)}",
        f"static differential: dy = ({static})*{g}",
        f"F'({v}) = {static}",
        f"alpha({g}) = {dd.alpha.format()}",
        f"o({g}) = {dd.remainder.format()}{o}",
        f"exact: {'yes' if dd.exact else 'no (truncated at order ' + str(dd.series.total_cap) + ')'}",
    ]
    data = {
        "input": F,
        "series": dd.series.to_json(),
        "static": static,
        "dynamic": dd.quotient().format(),
        "alpha": dd.alpha.to_json(),
        "remainder": dd.remainder.to_json(),
        "exact": dd.exact,
    }
    if args.format == "csv":
        pairs = [("input", F), ("dynamic_differential", dd.series.format()),
                 ("dynamic_derivative", dd.quotient().format()), ("static", static),
                 ("alpha", dd.alpha.format()), ("remainder", dd.remainder.format()),
                 ("exact", dd.exact)]
        return _kv_csv(pairs)
    return _emit(args.format, data, "\n".join(lines))


def cmd_nderiv(args) -> str:
    F = parse(args.expression)
    s = nth_dynamic_series(F, args.var, args.n, args.K)
    classical = classical_nth_derivative(F, args.var, args.n)
    at_zero = s.at_zero()
    v = args.var
    data = {
        "input": to_string(F),
        "n": args.n,
        "dynamic": s.format(),
        "generators": sorted(s.mentions()),
        "at_zero": to_string(at_zero),
        "classical": to_string(classical),
        "exact": s.exact,
        "verdict": "pass" if at_zero == classical else "fail",
    }
    text = "\n".join([
        f"F({v}) = {data['input']}",
        f"F^({args.n})o({v}) = {data['dynamic']}",
        f"generators -> 0: {data['at_zero']}",
        f"classical: {data['classical']}  [{data['verdict']}]",
    ])
    return _emit(args.format, data, text)


def cmd_restore(args) -> str:
    fam = restore(args.expression, args.var)
    return _emit(args.format, fam.to_json(), fam.render())


def _sum_text(rep: SumReport, label: str) -> str:
    lines = [f"{label} (N={rep.N}): {rep.value!r}"]
    if rep.reference is not None:
        lines.append(f"Newton-Leibniz reference: {rep.reference!r}")
        lines.append(f"abs_err: {rep.abs_err!r}")
    if rep.bound is not None:
        lines.append(f"dropped: {list(rep.dropped)}")
        lines.append(f"full sum: {rep.full_value!r}")
        lines.append(f"|full - hypo| <= {rep.bound!r}: {rep.bound_ok}")
    return "\n".join(lines)


def _reference(args):
    try:
        return float(newton_leibniz(args.expression, args.a, args.b, args.var))
    except NoRuleApplies:
        return None


def cmd_integrate(args) -> str:
    f = parse(args.expression)
    if args.a == args.b:
        rep = SumReport(0.0, args.N, reference=0.0)
        return _emit(args.format, rep.to_json(), _sum_text(rep, "static sum"))
    ref = _reference(args)
    if args.format == "csv":
        if ref is None:
            raise NoRuleApplies(f"no Newton-Leibniz reference for {to_string(f)}")
        Ns = [args.N * 10**k for k in range(STUDY_DECADES)]
        return study_csv(convergence_study(f, args.a, args.b, Ns, ref, args.var))
    rep = static_sum(f, Partition.uniform(args.a, args.b, args.N), ref, args.var)
    return _emit(args.format, rep.to_json(), _sum_text(rep, "static sum"))


def cmd_hypo(args) -> str:
    f = parse(args.expression)
    p = Partition.uniform(args.a, args.b, args.N)
    rep = hypo_sum(f, p, args.dropped, args.var)
    return _emit(args.format, rep.to_json(), _sum_text(rep, "hypo sum"))


def cmd_verify(args, err) -> tuple:
    corpus = load_corpus(args.corpus)
    result = run_suites(corpus, args.seed)
    for w in result.warnings:
        print(f"warning: {w}", file=err)
    if args.format == "json":
        out = json.dumps({
            "passed": result.passed,
            "checks": [c.__dict__ for c in result.checks],
            "warnings": result.warnings,
        }, indent=2) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["entry", "suite", "passed", "detail"])
        for c in result.checks:
            w.writerow([c.entry, c.suite, c.passed, c.detail])
        out = buf.getvalue()
    else:
        out = result.matrix() + "\n"
    return out, EXIT_OK if result.passed else EXIT_FAILED


COMMANDS = {
    "diff": cmd_diff,
    "ddiff": cmd_ddiff,
    "nderiv": cmd_nderiv,
    "restore": cmd_restore,
    "integrate": cmd_integrate,
    "hypo": cmd_hypo,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        if args.verb == "verify":
            text, code = cmd_verify(args, err)
        else:
            text, code = COMMANDS[args.verb](args), EXIT_OK
    except (ValidationError, ExpressionSyntaxError, IndexOutOfRange, NonAffineInner) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except (DomainError, NoRuleApplies, CompositionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_DOMAIN
    except WerdenError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    out.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
