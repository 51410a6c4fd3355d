"""Hypothesis strategies for canonical expressions."""

from fractions import Fraction

from hypothesis import strategies as st

from werden.expr import Const, Var, add, func, mul, power

small_rationals = st.builds(
    Fraction, st.integers(-5, 5), st.integers(1, 4)
)


def expressions(names=("x",), transcendental=True, max_leaves=6):
    leaves = st.one_of(
        st.sampled_from([Var(n) for n in names]),
        small_rationals.map(Const),
    )

    def extend(children):
        options = [
            st.tuples(children, children).map(lambda t: add(*t)),
            st.tuples(children, children).map(lambda t: mul(*t)),
            st.tuples(children, st.integers(0, 3)).map(lambda t: power(*t)),
        ]
        if transcendental:
            options.append(
                st.tuples(st.sampled_from(["sin", "cos", "exp"]), children)
                .map(lambda t: func(*t))
            )
        return st.one_of(options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


polynomials = expressions(transcendental=False, max_leaves=5)
