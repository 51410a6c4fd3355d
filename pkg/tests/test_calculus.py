import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import expressions, small_rationals
from werden.calculus import (
    chain_check,
    classical_derivative,
    classical_nth_derivative,
    dynamic_derivative,
    dynamic_differential,
    finite_difference_check,
    nth_dynamic_derivative,
    nth_dynamic_series,
    oracle_report,
    static_derivative,
    total_dynamic_differential,
)
from werden.errors import ValidationError
from werden.expr import ONE, ZERO, Const, Var, add, evaluate_array, mul, numeric_equal, parse, power, sub, subs, substitute
from werden.series import WerdenSeries

SCHEMA = {"input", "static", "dynamic", "alpha", "oracle", "max_abs_err", "verdict"}


def brute_quotient(F, var="x", gen="h"):
    """((F(x+h) - F(x)) / h by canonical expansion of the expression itself."""
    F = parse(F)
    diff = sub(substitute(F, var, add(Var(var), Var(gen))), F)
    return mul(diff, power(Var(gen), -1))


class TestDynamicDifferential:
    def test_cube(self):
        dd = dynamic_differential("x^3")
        assert dd.series.terms == {(1,): parse("3*x^2"), (2,): parse("3*x"), (3,): ONE}
        assert dd.static_part == parse("3*x^2")
        assert dd.alpha.to_expr() == parse("3*x*dx + dx^2")
        assert dd.exact

    def test_identity(self):
        dd = dynamic_differential("x")
        assert dd.series.terms == {(1,): ONE}
        assert dd.static_part == ONE
        assert dd.alpha.is_zero()

    def test_sine_truncated(self):
        dd = dynamic_differential("sin(x)", K=3)
        assert dd.static_part == parse("cos(x)")
        assert dd.alpha.to_expr() == parse("-sin(x)/2*dx - cos(x)/6*dx^2")
        assert not dd.exact
        # coefficients against the classical oracle: alpha_j = F^(j+1)/(j+1)!
        for j in (1, 2):
            oracle = classical_nth_derivative(parse("sin(x)"), "x", j + 1) * Fraction(1, math.factorial(j + 1))
            assert dd.alpha.coefficient(j) == oracle

    def test_split_invariant(self):
        for text in ("x^4 - 2*x", "exp(x)*x", "sin(x)^2"):
            dd = dynamic_differential(text)
            rebuilt = WerdenSeries.generator(dd.generators[0]).scale(dd.static_part) + dd.remainder
            assert rebuilt.terms == dd.series.terms
            assert dd.alpha.constant_term() == ZERO or not dd.alpha.terms

    def test_logarithm(self):
        dd = dynamic_differential("ln(x)", K=3)
        assert dd.static_part == parse("1/x")
        assert dd.alpha.to_expr() == parse("-1/2/x^2*dx + 1/3/x^3*dx^2")

    def test_generator_name_collision(self):
        with pytest.raises(ValidationError):
            dynamic_differential("x*dx")


class TestStaticDerivative:
    def test_cube(self):
        assert static_derivative("x^3") == parse("3*x^2")

    def test_constant(self):
        assert static_derivative("7") == ZERO

    @pytest.mark.parametrize("e", [Fraction(1), Fraction(2), Fraction(5), Fraction(1, 2), Fraction(-2), Fraction(3, 2), Fraction(-1)])
    def test_power_rule(self, e):
        assert static_derivative(power(Var("x"), e)) == mul(Const(e), power(Var("x"), e - 1))


class TestDynamicDerivative:
    def test_cube(self):
        assert dynamic_derivative("x^3") == parse("3*x^2 + 3*x*dx + dx^2")

    def test_identity(self):
        assert dynamic_derivative("x") == ONE

    def test_square_against_brute_force(self):
        got = dynamic_derivative("x^2")
        assert got == parse("2*x + dx")
        assert got == subs(brute_quotient("x^2"), {"h": Var("dx")})


class TestNth:
    def test_cubic_second(self):
        assert nth_dynamic_derivative("x^3", n=2) == parse("6*x + 3*d1x + 3*d2x")

    def test_cubic_second_at_zero(self):
        assert nth_dynamic_series("x^3", "x", 2).at_zero() == parse("6*x")

    def test_quartic_against_double_difference(self):
        F = parse("x^4")
        d1, d2 = Var("d1x"), Var("d2x")
        X = Var("x")
        num = add(
            substitute(F, "x", add(X, d1, d2)),
            mul(Const(-1), substitute(F, "x", add(X, d1))),
            mul(Const(-1), substitute(F, "x", add(X, d2))),
            F,
        )
        oracle = mul(num, power(d1, -1), power(d2, -1))
        got = nth_dynamic_derivative(F, n=2)
        assert got == oracle
        assert nth_dynamic_series(F, "x", 2).at_zero() == parse("12*x^2")

    def test_alpha_mentions_every_generator(self):
        s = nth_dynamic_series("x^4", "x", 3)
        assert s.without_constant().mentions() == {"d1x", "d2x", "d3x"}

    def test_transcendental_needs_order(self):
        with pytest.raises(ValidationError):
            nth_dynamic_series("sin(x)", "x", 3, K=2)
        s = nth_dynamic_series("sin(x)", "x", 2, K=4)
        assert s.at_zero() == parse("-sin(x)")
        assert not s.exact

    def test_invalid_n(self):
        with pytest.raises(ValidationError):
            nth_dynamic_series("x^2", "x", 0)


class TestTotal:
    def test_product(self):
        dd = total_dynamic_differential("x*y", ["x", "y"])
        assert dd.series.to_expr() == parse("y*dx + x*dy + dx*dy")
        direct = sub(mul(parse("x + dx"), parse("y + dy")), parse("x*y"))
        assert dd.series.to_expr() == direct

    def test_linear(self):
        dd = total_dynamic_differential("x + y", ["x", "y"])
        assert dd.series.to_expr() == parse("dx + dy")
        assert all(a.is_zero() for a in dd.alphas)

    def test_linear_part_matches_partials(self):
        F = parse("x^2*y")
        dd = total_dynamic_differential(F, ["x", "y"])
        assert dd.linear_part().to_expr() == parse("2*x*y*dx + x^2*dy")
        assert dd.static_parts == (classical_derivative(F, "x"), classical_derivative(F, "y"))


class TestChain:
    def test_square_of_sine(self):
        r = chain_check("y^2", "sin(t)")
        assert r.static == parse("2*sin(t)*cos(t)")
        assert r.product == parse("2*sin(t)*cos(t)")
        assert r.verdict == "pass"
        assert not r.inner_alpha.is_zero()

    def test_identity(self):
        r = chain_check("y", "t")
        assert r.inner_alpha.is_zero()
        assert r.static == ONE and r.verdict == "pass"

    def test_cube_of_square(self):
        r = chain_check("y^3", "t^2")
        assert r.static == r.product == parse("6*t^5")
        assert r.inner_alpha.to_expr() == parse("dt")

    def test_schema(self):
        assert set(chain_check("y^2", "sin(t)").to_json()) == SCHEMA
        assert set(oracle_report("x^3").to_json()) == SCHEMA


def test_oracle_report_values():
    rep = oracle_report("x^3")
    assert rep.static == rep.oracle == "3*x^2"
    assert rep.dynamic == "3*x^2 + 3*x*dx + dx^2"
    assert rep.verdict == "pass"


# -- invariants over the corpus -------------------------------------------------


def test_finite_difference_oracle(corpus):
    for e in corpus.functions:
        study = finite_difference_check(e.expr, e.var, (e.a, e.b))
        assert study.passes(1.9, 1e-6), (e.label, study)


def test_alpha_vanishes_linearly(corpus):
    for e in corpus.functions:
        dd = dynamic_differential(e.expr, e.var)
        xs = np.linspace(e.a, e.b, 33)
        for h in (1e-3, 1e-4):
            vals = evaluate_array(dd.alpha.to_expr(), {e.var: xs, "dx": np.full_like(xs, h)})
            assert np.max(np.abs(vals)) <= 10 * h * max(1.0, _scale(dd, e)), e.label


def _scale(dd, e):
    # C in |alpha(h)| <= C*h: the size of the first alpha coefficient on [a, b]
    xs = np.linspace(e.a, e.b, 33)
    c1 = dd.alpha.coefficient(1)
    return float(np.max(np.abs(np.broadcast_to(evaluate_array(c1, {e.var: xs}), xs.shape))))


def test_nth_at_zero_is_classical(corpus):
    for e in corpus.functions:
        for n in (1, 2, 3):
            s = nth_dynamic_series(e.expr, e.var, n, K=4)
            assert s.at_zero() == classical_nth_derivative(e.expr, e.var, n), (e.label, n)


@given(expressions(max_leaves=5), expressions(max_leaves=5), small_rationals, small_rationals)
def test_linearity(F, G, a, b):
    combo = add(mul(Const(a), F), mul(Const(b), G))
    lhs = dynamic_differential(combo, K=3).series
    rhs = dynamic_differential(F, K=3).series.scale(Const(a)) + dynamic_differential(G, K=3).series.scale(Const(b))
    assert lhs.terms == rhs.terms


@given(expressions(transcendental=False, max_leaves=5), expressions(transcendental=False, max_leaves=5))
def test_dynamic_product_rule(F, G):
    sF = dynamic_differential(F, K=None).series
    sG = dynamic_differential(G, K=None).series
    sFG = dynamic_differential(mul(F, G), K=None).series
    assert sFG.terms == (sG.scale(F) + sF.scale(G) + sF * sG).terms


@given(expressions(transcendental=False, max_leaves=6), st.integers(1, 3))
def test_generator_symmetry(F, n):
    e = nth_dynamic_derivative(F, n=n)
    names = [f"d{i}x" for i in range(1, n + 1)]
    for perm in itertools.permutations(names):
        assert subs(e, {a: Var(b) for a, b in zip(names, perm)}) == e
