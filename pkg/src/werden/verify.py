"""Invariant suites run over a verification corpus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import (
    chain_check,
    classical_derivative,
    classical_nth_derivative,
    dynamic_differential,
    finite_difference_check,
    nth_dynamic_series,
    static_derivative,
)
from .corpus import ChainEntry, FuncEntry, VerifyCorpus
from .errors import WerdenError
from .expr import ZERO, evaluate_array, max_abs_difference
from .integrate import (
    Partition,
    convergence_study,
    dynamic_sum,
    fitted_order,
    hypo_sum,
    newton_leibniz,
)
from .restore import restore, verify_family

FD_STEPS = (1e-2, 1e-3, 1e-4)
FD_POINTS = 64
TELESCOPE_NS = (1, 10, 1_000, 100_000)
TELESCOPE_TOL = 1e-9
CONVERGENCE_NS = (100, 1_000, 10_000)
ORDER_RANGE = (0.9, 1.1)
HYPO_NS = (1_000, 10_000)
HYPO_FRACTIONS = (0.25, 0.5, 0.75)
HYPO_RATIO_RANGE = (8.0, 12.0)
ALPHA_STEPS = (1e-3, 1e-4)


@dataclass
class Check:
    entry: str
    suite: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyResult:
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def suites(self) -> list:
        seen = []
        for c in self.checks:
            if c.suite not in seen:
                seen.append(c.suite)
        return seen

    def matrix(self) -> str:
        suites = self.suites()
        rows = []
        for c in self.checks:
            if c.entry not in rows:
                rows.append(c.entry)
        cell = {(c.entry, c.suite): ("pass" if c.passed else "FAIL") for c in self.checks}
        w0 = max([len(r) for r in rows] + [5])
        widths = [max(len(s), 4) for s in suites]
        lines = ["entry".ljust(w0) + "  " + "  ".join(s.ljust(w) for s, w in zip(suites, widths))]
        for r in rows:
            lines.append(r.ljust(w0) + "  " + "  ".join(
                cell.get((r, s), "-").ljust(w) for s, w in zip(suites, widths)))
        n_fail = sum(not c.passed for c in self.checks)
        lines.append(f"{len(self.checks)} checks, {n_fail} failed")
        return "\n".join(lines)


def hypo_dropped(p: Partition, fractions=HYPO_FRACTIONS) -> list:
    """Subintervals containing fixed interior points, so the dropped points stay put as N grows."""
    return p.locate(p.a + f * (p.b - p.a) for f in fractions)


def _guard(entry, suite, fn) -> Check:
    try:
        return fn()
    except WerdenError as exc:
        return Check(entry, suite, False, f"{type(exc).__name__}: {exc}")


def check_static_vs_classical(e: FuncEntry, seed: int = 42) -> Check:
    d = static_derivative(e.expr, e.var)
    c = classical_derivative(e.expr, e.var)
    if d == c:
        return Check(e.label, "static=classical", True, "structural")
    err = max_abs_difference(d, c, seed=seed, domain=(e.a, e.b))
    return Check(e.label, "static=classical", err <= 1e-9, f"numeric max err {err:.3g}")


def check_fd_order(e: FuncEntry, seed: int = 42) -> Check:
    st = finite_difference_check(e.expr, e.var, (e.a, e.b), FD_STEPS, FD_POINTS, seed)
    order = "exact" if st.exact_difference else f"{st.order:.3f}"
    return Check(e.label, "fd-order", st.passes(1.9, 1e-6),
                 f"order {order}, err@1e-4 {st.max_errors[-1]:.3g}")


def check_nth(e: FuncEntry, n: int = 2, K: int = 4) -> Check:
    s = nth_dynamic_series(e.expr, e.var, n, K)
    ok = s.at_zero() == classical_nth_derivative(e.expr, e.var, n)
    return Check(e.label, "nth=classical", ok, f"n={n}")


def check_alpha_vanishes(e: FuncEntry, seed: int = 42) -> Check:
    dd = dynamic_differential(e.expr, e.var)
    alpha = dd.alpha.to_expr()
    if alpha == ZERO:
        return Check(e.label, "alpha->0", True, "alpha is 0")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(e.a, e.b - max(ALPHA_STEPS), 32)
    g = dd.generators[0].name
    mags = [float(np.max(np.abs(evaluate_array(alpha, {e.var: xs, g: np.full_like(xs, h)}))))
            for h in ALPHA_STEPS]
    # |alpha(h)| <= C*h: a tenfold smaller h gives at least ~tenfold smaller alpha
    ok = mags[1] <= mags[0] * (ALPHA_STEPS[1] / ALPHA_STEPS[0]) * 1.5
    return Check(e.label, "alpha->0", ok, f"|alpha| {mags[0]:.3g} -> {mags[1]:.3g}")


def check_telescoping(e: FuncEntry) -> Check:
    worst = 0.0
    for N in TELESCOPE_NS:
        rep = dynamic_sum(e.expr, Partition.uniform(e.a, e.b, N), e.var)
        worst = max(worst, rep.abs_err)
    return Check(e.label, "telescoping", worst <= TELESCOPE_TOL, f"max err {worst:.3g}")


def check_convergence(e: FuncEntry) -> Check:
    rows = convergence_study(e.expr, e.a, e.b, CONVERGENCE_NS, var=e.var)
    order = fitted_order(rows)
    lo, hi = ORDER_RANGE
    return Check(e.label, "convergence", lo <= order <= hi, f"order {order:.3f}")


def check_hypo(e: FuncEntry) -> Check:
    errs = []
    ok = True
    for N in HYPO_NS:
        p = Partition.uniform(e.a, e.b, N)
        rep = hypo_sum(e.expr, p, hypo_dropped(p), e.var)
        diff = abs(rep.full_value - rep.value)
        ok &= diff <= rep.bound
        errs.append(diff)
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf
    lo, hi = HYPO_RATIO_RANGE
    ok &= lo <= ratio <= hi
    return Check(e.label, "hypo", bool(ok), f"ratio {ratio:.3f}")


def check_restore(e: FuncEntry, seed: int = 42) -> Check:
    fam = restore(e.expr, e.var)
    rep = verify_family(fam, e.expr, seed=seed, domain=(e.a, e.b))
    how = "structural" if rep.structural else f"numeric {rep.max_abs_err:.3g}"
    return Check(e.label, "restore", rep.verdict == "pass", f"{fam.render()} ({how})")


def check_chain(c: ChainEntry, seed: int = 42) -> Check:
    rep = chain_check(c.outer, c.inner, seed=seed, domain=(c.a, c.b))
    t = next(iter(c.inner.free)) if c.inner.free else "t"
    nonlinear = classical_nth_derivative(c.inner, t, 2) != ZERO
    alpha_nonzero = not rep.inner_alpha.is_zero()
    ok = rep.verdict == "pass" and alpha_nonzero == nonlinear
    return Check(c.label, "chain", ok,
                 f"err {rep.max_abs_err:.3g}, alpha {'nonzero' if alpha_nonzero else '0'}")


def run_suites(corpus: VerifyCorpus, seed: int = 42) -> VerifyResult:
    result = VerifyResult()
    if not corpus.entries:
        result.warnings.append("corpus is empty; nothing was checked")
        return result
    for e in corpus.functions:
        suites = [
            ("static=classical", lambda: check_static_vs_classical(e, seed)),
            ("fd-order", lambda: check_fd_order(e, seed)),
            ("nth=classical", lambda: check_nth(e)),
            ("alpha->0", lambda: check_alpha_vanishes(e, seed)),
            ("telescoping", lambda: check_telescoping(e)),
            ("hypo", lambda: check_hypo(e)),
        ]
        if "restore" in e.tags:
            suites += [
                ("restore", lambda: check_restore(e, seed)),
                ("convergence", lambda: check_convergence(e)),
            ]
        for name, fn in suites:
            result.checks.append(_guard(e.label, name, fn))
    for c in corpus.chains:
        result.checks.append(_guard(c.label, "chain", lambda: check_chain(c, seed)))
    return result
