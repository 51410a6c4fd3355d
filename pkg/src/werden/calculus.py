"""Dynamic and static differentials, derivatives, and their classical oracles.

The product-facing derivatives come from expanding ``F(x + dx) - F(x)`` in
generator series and reading off coefficients.  :func:`classical_derivative`
(the textbook rules) and :func:`finite_difference_check` exist only to check
that route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .expr import (
    ONE,
    ZERO,
    Add,
    Const,
    Expr,
    Func,
    Mul,
    Pow,
    Var,
    add,
    as_expr,
    evaluate_array,
    func,
    is_polynomial,
    max_abs_difference,
    mul,
    neg,
    power,
    substitute,
    to_string,
)
from .series import DEFAULT_ORDER, Generator, WerdenSeries, expand


def generator_for(var: str, index: int = 1, numbered: bool = False) -> Generator:
    return Generator(index, f"d{index}{var}" if numbered else f"d{var}")


def _check_names(F: Expr, gens) -> None:
    clash = {g.name for g in gens} & F.free
    if clash:
        raise ValidationError(f"variable name(s) {sorted(clash)} collide with generator names")


@dataclass(frozen=True)
class DynamicDifferential:
    """``series = sum_i static_parts[i]*d_i + remainder``, ``remainder = sum_i alphas[i]*d_i``.

    For several generators each remainder term is attributed to the lowest
    indexed generator it contains, which makes the alpha split unique.
    """

    base_vars: tuple
    generators: tuple
    series: WerdenSeries
    static_parts: tuple
    alphas: tuple
    remainder: WerdenSeries

    @property
    def static_part(self) -> Expr:
        if len(self.static_parts) != 1:
            raise ValueError("static_part is defined for one variable; use static_parts")
        return self.static_parts[0]

    @property
    def alpha(self) -> WerdenSeries:
        if len(self.alphas) != 1:
            raise ValueError("alpha is defined for one variable; use alphas")
        return self.alphas[0]

    @property
    def exact(self) -> bool:
        return self.series.exact

    def linear_part(self) -> WerdenSeries:
        return self.series - self.remainder

    def dynamic_derivative(self) -> Expr:
        """``static_part + alpha`` as one expression (single variable only)."""
        return add(self.static_part, self.alpha.to_expr())

    def quotient(self) -> WerdenSeries:
        """``series / dx`` kept as a series, i.e. the dynamic derivative."""
        if len(self.generators) != 1:
            raise ValueError("quotient is defined for one variable")
        return self.series.divide_by_monomial((1,))

    def to_json(self) -> dict:
        return {
            "vars": list(self.base_vars),
            "generators": [g.name for g in self.generators],
            "series": self.series.to_json(),
            "static": [to_string(s) for s in self.static_parts],
            "alpha": [a.to_json() for a in self.alphas],
            "exact": self.series.exact,
        }


def _split(vars_, gens, series: WerdenSeries) -> DynamicDifferential:
    m = len(gens)
    units = [tuple(int(i == j) for j in range(m)) for i in range(m)]
    static = tuple(series.coefficient(u) for u in units)
    rem_terms = {d: c for d, c in series.terms.items() if sum(d) >= 2}
    remainder = WerdenSeries(series.gens, rem_terms, series.caps, series.total_cap, series.exact)
    parts: list = [{} for _ in range(m)]
    for d, c in rem_terms.items():
        i = next(k for k, v in enumerate(d) if v)
        parts[i][d] = c
    alphas = tuple(
        WerdenSeries(series.gens, parts[i], series.caps, series.total_cap, series.exact)
        .divide_by_monomial(units[i])
        for i in range(m)
    )
    return DynamicDifferential(tuple(vars_), tuple(gens), series, static, alphas, remainder)


def dynamic_differential(F, var: str = "x", K: int | None = DEFAULT_ORDER) -> DynamicDifferential:
    """Expand ``F(var + dvar) - F(var)`` and split off the static part."""
    F = as_expr(F)
    g = generator_for(var)
    _check_names(F, (g,))
    series = expand(F, {var: g}, K).without_constant()
    return _split((var,), (g,), series)


def total_dynamic_differential(F, vars: Sequence[str], K: int | None = DEFAULT_ORDER) -> DynamicDifferential:
    """Multivariable version: one generator per variable, in the given order."""
    F = as_expr(F)
    gens = tuple(Generator(i + 1, f"d{v}") for i, v in enumerate(vars))
    _check_names(F, gens)
    series = expand(F, dict(zip(vars, gens)), K).without_constant()
    return _split(vars, gens, series)


def static_derivative(F, var: str = "x") -> Expr:
    # degree-1 coefficients are exact under any truncation order >= 1
    return dynamic_differential(F, var, K=1).static_part


def dynamic_derivative(F, var: str = "x", K: int | None = DEFAULT_ORDER) -> Expr:
    return dynamic_differential(F, var, K).dynamic_derivative()


def nth_dynamic_series(F, var: str, n: int, K: int | None = DEFAULT_ORDER) -> WerdenSeries:
    """Quotient series ``d_n...d_1 y / (d_1x ... d_nx)`` over generators d1x..dnx.

    Step i shifts every coefficient of the previous difference by a fresh
    generator and subtracts.  Polynomials are expanded exactly; other inputs
    are truncated at total generator degree K (before division), so K >= n.
    """
    F = as_expr(F)
    if n < 1:
        raise ValidationError("n must be >= 1")
    gens = tuple(generator_for(var, i, numbered=True) for i in range(1, n + 1))
    _check_names(F, gens)
    if is_polynomial(F):
        K = None
    elif K is None or K < n:
        raise ValidationError(f"non-polynomial input needs K >= n (got K={K}, n={n})")

    S = WerdenSeries.constant(F, gens)
    for g in gens:
        shifted = WerdenSeries.zero(gens)
        for d, c in S.terms.items():
            lifted = expand(c, {var: g}, K).with_generators(gens)
            shifted = shifted + lifted * WerdenSeries(gens, {d: ONE})
        if K is not None:
            shifted = shifted.truncate(total=K)
        S = shifted - S.truncate(total=K)
    return S.divide_by_monomial((1,) * n)


def nth_dynamic_derivative(F, var: str = "x", n: int = 2, K: int | None = DEFAULT_ORDER) -> Expr:
    return nth_dynamic_series(F, var, n, K).to_expr()


# ---------------------------------------------------------------------------
# classical oracle


def classical_derivative(e, var: str = "x") -> Expr:
    """Textbook symbolic derivative (sum, product, power and chain rules)."""
    e = as_expr(e)
    if var not in e.free:
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(*(classical_derivative(t, var) for t in e.terms))
    if isinstance(e, Mul):
        fs = e.factors
        parts = []
        for i, f in enumerate(fs):
            df = classical_derivative(f, var)
            if df != ZERO:
                parts.append(mul(Const(e.coeff), df, *fs[:i], *fs[i + 1:]))
        return add(*parts)
    if isinstance(e, Pow):
        return mul(Const(e.exp), power(e.base, e.exp - 1), classical_derivative(e.base, var))
    if isinstance(e, Func):
        du = classical_derivative(e.arg, var)
        u = e.arg
        if e.name == "sin":
            return mul(func("cos", u), du)
        if e.name == "cos":
            return neg(mul(func("sin", u), du))
        if e.name == "exp":
            return mul(func("exp", u), du)
        return mul(du, power(u, -1))
    raise TypeError(e)


def classical_nth_derivative(e, var: str, n: int) -> Expr:
    for _ in range(n):
        e = classical_derivative(e, var)
    return e


@dataclass
class FiniteDifferenceStudy:
    """Max abs error of the static derivative against central differences."""

    expression: str
    hs: tuple
    max_errors: tuple
    order: float
    exact_difference: bool = False

    def passes(self, min_order: float = 1.9, max_err: float = 1e-6) -> bool:
        if self.max_errors[-1] >= max_err:
            return False
        return self.exact_difference or self.order >= min_order


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def finite_difference_check(F, var: str = "x", interval=(-1.0, 1.0),
                            hs=(1e-2, 1e-3, 1e-4), n_points: int = 64,
                            seed: int = 42) -> FiniteDifferenceStudy:
    """Compare the static derivative with (F(x+h) - F(x-h)) / 2h at seeded points.

    When the classical third derivative vanishes identically the central
    difference has no truncation error and only rounding is left, so the
    order is not measurable; ``exact_difference`` records that case.
    """
    F = as_expr(F)
    f = static_derivative(F, var)
    a, b = interval
    margin = max(hs)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(a + margin, b - margin, n_points)
    fx = evaluate_array(f, {var: xs})
    errors = []
    for h in hs:
        cd = (evaluate_array(F, {var: xs + h}) - evaluate_array(F, {var: xs - h})) / (2 * h)
        errors.append(float(np.max(np.abs(cd - fx))))
    exact = classical_nth_derivative(F, var, 3) == ZERO
    floor = np.finfo(float).tiny
    order = math.inf if exact else loglog_slope(hs, np.maximum(errors, floor))
    return FiniteDifferenceStudy(to_string(F), tuple(hs), tuple(errors), order, exact)


@dataclass
class OracleReport:
    """JSON mirror: {input, static, dynamic, alpha, oracle, max_abs_err, verdict}."""

    input: str
    static: str
    dynamic: str
    alpha: str
    oracle: str
    max_abs_err: float
    verdict: str

    def to_json(self) -> dict:
        return {
            "input": self.input,
            "static": self.static,
            "dynamic": self.dynamic,
            "alpha": self.alpha,
            "oracle": self.oracle,
            "max_abs_err": self.max_abs_err,
            "verdict": self.verdict,
        }


def oracle_report(F, var: str = "x", K: int | None = DEFAULT_ORDER, tol: float = 1e-9,
                  seed: int = 42, domain=(-3.0, 3.0)) -> OracleReport:
    """Werden-route derivative next to the classical one."""
    F = as_expr(F)
    dd = dynamic_differential(F, var, K)
    classical = classical_derivative(F, var)
    if dd.static_part == classical:
        err = 0.0
    else:
        err = max_abs_difference(dd.static_part, classical, seed=seed, domain=domain)
    return OracleReport(
        input=to_string(F),
        static=to_string(dd.static_part),
        dynamic=dd.quotient().format(),
        alpha=dd.alpha.format(),
        oracle=to_string(classical),
        max_abs_err=err,
        verdict="pass" if err <= tol else "fail",
    )


@dataclass
class ChainReport:
    outer: str
    inner: str
    composition: str
    static: Expr
    product: Expr
    structural: bool
    max_abs_err: float
    inner_alpha: WerdenSeries
    inner_dynamic: WerdenSeries
    verdict: str

    def to_json(self) -> dict:
        return {
            "input": f"{self.outer} with {self.inner}",
            "static": to_string(self.static),
            "dynamic": self.inner_dynamic.format(),
            "alpha": self.inner_alpha.format(),
            "oracle": to_string(self.product),
            "max_abs_err": self.max_abs_err,
            "verdict": self.verdict,
        }


def _sole_var(e: Expr, fallback: str) -> str:
    if len(e.free) == 1:
        return next(iter(e.free))
    if not e.free:
        return fallback
    raise ValidationError(f"{to_string(e)} has several free variables; name the one to use")


def chain_check(F, G, K: int | None = DEFAULT_ORDER, outer_var: str | None = None,
                inner_var: str | None = None, tol: float = 1e-9, seed: int = 42,
                domain=(-3.0, 3.0)) -> ChainReport:
    """Differentiate ``F(G(t))`` directly and as ``F'(G(t)) * G'(t)``.

    Also returns the inner dynamic differential's alpha: the increment of
    ``G`` over ``dt`` is ``G'(t)*dt`` plus ``alpha*dt``, which vanishes only
    when ``G`` is affine.
    """
    F, G = as_expr(F), as_expr(G)
    y = outer_var or _sole_var(F, "y")
    t = inner_var or _sole_var(G, "t")
    H = substitute(F, y, G)
    direct = static_derivative(H, t)
    product = mul(substitute(static_derivative(F, y), y, G), static_derivative(G, t))
    structural = direct == product
    err = 0.0 if structural else max_abs_difference(direct, product, seed=seed, domain=domain)
    inner = dynamic_differential(G, t, K)
    return ChainReport(
        outer=to_string(F),
        inner=to_string(G),
        composition=to_string(H),
        static=direct,
        product=product,
        structural=structural,
        max_abs_err=err,
        inner_alpha=inner.alpha,
        inner_dynamic=inner.quotient(),
        verdict="pass" if err <= tol else "fail",
    )
