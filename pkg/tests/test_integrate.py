import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from werden.errors import BreakpointOutsideDomain, IndexOutOfRange, NoRuleApplies, ValidationError
from werden.expr import evaluate, parse
from werden.integrate import (
    Partition,
    PrimitiveDifference,
    SumReport,
    convergence_study,
    dynamic_sum,
    fitted_order,
    hypo_sum,
    integrate_piecewise,
    newton_leibniz,
    static_sum,
    static_terms,
    study_csv,
)

STEP = [((0.0, 1.0), "0"), ((1.0, 2.0), "1")]


def left_riemann_3x2(N):
    """Closed form of sum_{i<N} 3*(i/N)^2 / N."""
    return 3 * (N - 1) * N * (2 * N - 1) / 6 / N**3


class TestPartition:
    def test_uniform(self):
        p = Partition.uniform(0, 1, 4)
        assert p.nodes == (0.0, 0.25, 0.5, 0.75, 1.0)
        assert p.N == 4 and p.scheme == "uniform"

    def test_equal_spacing(self):
        w = Partition.uniform(-1.3, 2.7, 1000).widths
        assert np.max(np.abs(w - 4.0 / 1000)) < 1e-13

    @pytest.mark.parametrize("a, b, N", [(0, 1, 0), (1, 1, 3), (2, 1, 3)])
    def test_invalid(self, a, b, N):
        with pytest.raises(ValidationError):
            Partition.uniform(a, b, N)

    def test_not_increasing(self):
        with pytest.raises(ValidationError):
            Partition.from_nodes([0, 0.5, 0.5, 1])

    def test_refined(self):
        p = Partition.uniform(0, 2, 3).refined([1.0, 0.0, 5.0])
        assert p.nodes[0] == 0 and 1.0 in p.nodes and p.N == 4


class TestDynamicSum:
    def test_cube_ten(self):
        assert abs(dynamic_sum("x^3", Partition.uniform(0, 1, 10)).value - 1) <= 1e-12

    def test_cube_one(self):
        assert abs(dynamic_sum("x^3", Partition.uniform(0, 1, 1)).value - 1) <= 1e-15

    def test_sine(self):
        rep = dynamic_sum("sin(x)", Partition.uniform(0, 1.5, 1000))
        assert abs(rep.value - math.sin(1.5)) <= 1e-10
        assert rep.includes_alpha


class TestStaticSum:
    @pytest.mark.parametrize("N", [100, 1000, 10_000])
    def test_left_riemann_bound(self, N):
        rep = static_sum("3*x^2", Partition.uniform(0, 1, N), reference=1.0)
        assert rep.abs_err <= 3 / N * 2
        assert abs(rep.value - left_riemann_3x2(N)) <= 1e-12
        assert not rep.includes_alpha

    def test_zero(self):
        assert static_sum("0", Partition.uniform(-2, 5, 37)).value == 0.0

    def test_one(self):
        assert static_sum("1", Partition.uniform(0.3, 2.9, 1000)).value == 2.9 - 0.3

    def test_abs_err_reported(self):
        rep = static_sum("x", Partition.uniform(0, 1, 2), reference=0.5)
        assert rep.value == 0.25 and rep.abs_err == 0.25


class TestNewtonLeibniz:
    def test_square(self):
        assert newton_leibniz("3*x^2", 0, 1) == 1.0

    def test_squared_sine(self):
        assert abs(newton_leibniz("sin(x)^2", 0, math.pi) - math.pi / 2) <= 1e-12

    def test_empty_interval(self):
        assert newton_leibniz("x*sin(x)", 2.0, 2.0) == 0.0

    def test_is_a_difference(self):
        v = newton_leibniz("3*x^2", 0, 2)
        assert isinstance(v, PrimitiveDifference) and v.base == parse("x^3")

    def test_no_rule(self):
        with pytest.raises(NoRuleApplies):
            newton_leibniz("x*sin(x)", 0, 1)


@given(st.sampled_from(["3*x^2", "sin(x)", "exp(x)", "cos(2*x)^2", "x^5 - x"]),
       st.floats(-2, 2), st.floats(-2, 2))
def test_sign_reversal(f, a, b):
    assert newton_leibniz(f, b, a) == -newton_leibniz(f, a, b)


@given(st.sampled_from(["3*x^2", "sin(x)", "exp(x)"]), st.integers(1, 50), st.integers(1, 50))
def test_interval_additivity(f, n1, n2):
    left = Partition.uniform(0.0, 0.7, n1)
    right = Partition.uniform(0.7, 1.9, n2)
    joined = Partition.from_nodes(left.nodes + right.nodes[1:])
    whole = static_terms(f, joined)
    assert whole.tolist() == static_terms(f, left).tolist() + static_terms(f, right).tolist()
    assert static_sum(f, joined).value == math.fsum(
        static_terms(f, left).tolist() + static_terms(f, right).tolist())


class TestHypo:
    def test_bound(self):
        p = Partition.uniform(0, 1, 10_000)
        rep = hypo_sum("3*x^2", p, [2500, 5000, 7500])
        assert abs(rep.full_value - rep.value) <= 3 * 3 * 1e-4
        assert rep.bound_ok

    def test_nothing_dropped(self):
        p = Partition.uniform(0, 1, 100)
        assert hypo_sum("3*x^2", p, []).value == static_sum("3*x^2", p).value

    def test_drop_all(self):
        p = Partition.uniform(0, 1, 7)
        assert hypo_sum("3*x^2", p, range(7)).value == 0.0

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            hypo_sum("x", Partition.uniform(0, 1, 10), [10])

    def test_too_many_dropped(self):
        with pytest.raises(ValidationError):
            SumReport(0.0, 2, dropped=(0, 1, 2))


class TestPiecewise:
    def test_step(self):
        rep = integrate_piecewise(STEP, 0, 2, 10_000)
        assert rep.reference == 1.0
        assert abs(rep.value - 1.0) <= 2e-3

    def test_single_piece(self):
        rep = integrate_piecewise([((0.0, 1.0), "3*x^2")], 0, 1, 1000)
        direct = static_sum("3*x^2", Partition.uniform(0, 1, 1000), float(newton_leibniz("3*x^2", 0, 1)))
        assert rep.value == direct.value and rep.reference == direct.reference

    def test_jump_at_endpoint(self):
        rep = integrate_piecewise([((-1.0, 0.0), "5"), ((0.0, 1.0), "1")], 0, 1, 100)
        assert rep.value == 1.0 and rep.reference == 1.0

    def test_continuous_primitive(self):
        rep = integrate_piecewise([((0.0, 1.0), "x"), ((1.0, 3.0), "2*x")], 0, 3, 100)
        assert abs(rep.reference - (0.5 + 8.0)) <= 1e-12

    def test_breakpoint_outside(self):
        with pytest.raises(BreakpointOutsideDomain):
            integrate_piecewise([((0.0, 3.0), "0"), ((3.0, 4.0), "1")], 0, 2, 10)

    def test_gap(self):
        with pytest.raises(ValidationError):
            integrate_piecewise([((0.0, 1.0), "0"), ((1.5, 2.0), "1")], 0, 2, 10)

    def test_no_rule_per_piece(self):
        with pytest.raises(NoRuleApplies):
            integrate_piecewise([((0.0, 1.0), "x*sin(x)"), ((1.0, 2.0), "1")], 0, 2, 10)


class TestStudy:
    def test_first_order(self):
        rows = convergence_study("3*x^2", 0, 1, [100, 1000, 10_000])
        assert 0.9 <= fitted_order(rows) <= 1.1
        assert rows[0].slope_estimate is None
        assert all(-1.1 <= r.slope_estimate <= -0.9 for r in rows[1:])

    def test_csv_columns(self):
        text = study_csv(convergence_study("3*x^2", 0, 1, [10, 100]))
        lines = text.splitlines()
        assert lines[0] == "N,value,reference,abs_err,slope_estimate"
        assert len(lines) == 3 and lines[1].endswith(",")


def test_bit_stable():
    p = Partition.uniform(0, 1.5, 100_000)
    assert static_sum("sin(x)", p).value == static_sum("sin(x)", p).value
