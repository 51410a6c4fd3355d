"""Polynomials and truncated power series in ordered infinitesimal generators.

A :class:`WerdenSeries` maps multi-degrees (one exponent per generator) to
expression coefficients.  Generators commute and are *not* nilpotent: higher
powers are kept unless a cap is set, and any cap that actually discards a
nonzero term clears the ``exact`` flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import CompositionError, SeriesDivisionError
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
    func,
    mul,
    neg,
    parse,
    power,
    to_string,
)

DEFAULT_ORDER = 4
ELEMENTARY = ("sin", "cos", "exp", "ln")


@dataclass(frozen=True, order=True)
class Generator:
    """An infinitesimal generator such as ``dx`` or ``d2x``, ordered by index."""

    index: int
    name: str

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("generator index must be positive")

    @property
    def symbol(self) -> Var:
        return Var(self.name)


def _min_cap(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


@dataclass(frozen=True)
class WerdenSeries:
    gens: tuple
    terms: dict = field(default_factory=dict)
    caps: tuple = ()
    total_cap: int | None = None
    exact: bool = True

    def __post_init__(self):
        if not self.caps:
            object.__setattr__(self, "caps", (None,) * len(self.gens))
        if len(self.caps) != len(self.gens):
            raise ValueError("one cap per generator")
        if len({g.index for g in self.gens}) != len(self.gens):
            raise ValueError("generator indices must be unique")
        if list(self.gens) != sorted(self.gens):
            raise ValueError("generators must be ordered by index")

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, gens=()) -> "WerdenSeries":
        return cls(tuple(gens))

    @classmethod
    def constant(cls, c, gens=()) -> "WerdenSeries":
        gens = tuple(gens)
        c = as_expr(c)
        terms = {} if c == ZERO else {(0,) * len(gens): c}
        return cls(gens, terms)

    @classmethod
    def generator(cls, g: Generator, gens=None) -> "WerdenSeries":
        gens = tuple(gens) if gens is not None else (g,)
        degrees = tuple(1 if h == g else 0 for h in gens)
        if g not in gens:
            raise ValueError(f"{g.name} is not among the series generators")
        return cls(gens, {degrees: ONE})

    # -- basic queries ----------------------------------------------------

    @property
    def unbounded(self) -> bool:
        return self.total_cap is None and all(c is None for c in self.caps)

    def is_zero(self) -> bool:
        return not self.terms

    def _degrees(self, degrees) -> tuple:
        if isinstance(degrees, Mapping):
            names = {g.name for g in self.gens}
            unknown = set(degrees) - names
            if unknown:
                return None
            return tuple(degrees.get(g.name, 0) for g in self.gens)
        if isinstance(degrees, int):
            degrees = (degrees,)
        degrees = tuple(degrees)
        if len(degrees) != len(self.gens):
            raise ValueError("multi-degree length must match the generator count")
        return degrees

    def coefficient(self, degrees) -> Expr:
        """Stored coefficient of a multi-degree, or the zero expression."""
        key = self._degrees(degrees)
        if key is None:
            return ZERO
        return self.terms.get(key, ZERO)

    def constant_term(self) -> Expr:
        return self.terms.get((0,) * len(self.gens), ZERO)

    def degree(self) -> int:
        return max((sum(d) for d in self.terms), default=0)

    def _fits(self, degrees, caps, total_cap) -> bool:
        if total_cap is not None and sum(degrees) > total_cap:
            return False
        return all(c is None or d <= c for d, c in zip(degrees, caps))

    # -- alignment --------------------------------------------------------

    def with_generators(self, gens) -> "WerdenSeries":
        """Re-express over a superset of generators."""
        gens = tuple(sorted(gens))
        if gens == self.gens:
            return self
        pos = []
        by_index = {g.index: g for g in gens}
        for g in self.gens:
            h = by_index.get(g.index)
            if h is None:
                raise ValueError(f"generator {g.name} missing from target set")
            if h != g:
                raise ValueError(f"generator index {g.index} names both {g.name} and {h.name}")
            pos.append(gens.index(h))
        terms = {}
        for d, c in self.terms.items():
            nd = [0] * len(gens)
            for p, k in zip(pos, d):
                nd[p] = k
            terms[tuple(nd)] = c
        caps = [None] * len(gens)
        for p, c in zip(pos, self.caps):
            caps[p] = c
        return WerdenSeries(gens, terms, tuple(caps), self.total_cap, self.exact)

    def _align(self, other: "WerdenSeries"):
        gens = tuple(sorted(set(self.gens) | set(other.gens)))
        return self.with_generators(gens), other.with_generators(gens)

    # -- arithmetic -------------------------------------------------------

    def _build(self, acc: dict, caps, total_cap, exact) -> "WerdenSeries":
        terms = {}
        for d, parts in acc.items():
            c = add(*parts) if isinstance(parts, list) else parts
            if c == ZERO:
                continue
            if self._fits(d, caps, total_cap):
                terms[d] = c
            else:
                exact = False
        return WerdenSeries(self.gens, dict(sorted(terms.items())), tuple(caps), total_cap, exact)

    def __add__(self, other):
        if not isinstance(other, WerdenSeries):
            other = WerdenSeries.constant(as_expr(other), self.gens)
        a, b = self._align(other)
        acc: dict = {}
        for d, c in a.terms.items():
            acc.setdefault(d, []).append(c)
        for d, c in b.terms.items():
            acc.setdefault(d, []).append(c)
        caps = tuple(_min_cap(x, y) for x, y in zip(a.caps, b.caps))
        return a._build(acc, caps, _min_cap(a.total_cap, b.total_cap), a.exact and b.exact)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(Const(Fraction(-1)))

    def __sub__(self, other):
        if not isinstance(other, WerdenSeries):
            other = WerdenSeries.constant(as_expr(other), self.gens)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, WerdenSeries):
            return self.scale(as_expr(other))
        a, b = self._align(other)
        caps = tuple(_min_cap(x, y) for x, y in zip(a.caps, b.caps))
        total_cap = _min_cap(a.total_cap, b.total_cap)
        acc: dict = {}
        for da, ca in a.terms.items():
            for db, cb in b.terms.items():
                d = tuple(x + y for x, y in zip(da, db))
                acc.setdefault(d, []).append(mul(ca, cb))
        return a._build(acc, caps, total_cap, a.exact and b.exact)

    __rmul__ = __mul__

    def scale(self, c: Expr) -> "WerdenSeries":
        c = as_expr(c)
        acc = {d: [mul(c, v)] for d, v in self.terms.items()}
        return self._build(acc, self.caps, self.total_cap, self.exact)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("series powers take nonnegative integers")
        result = WerdenSeries.constant(ONE, self.gens)
        result = WerdenSeries(self.gens, result.terms, self.caps, self.total_cap, self.exact)
        for _ in range(n):
            result = result * self
        return result

    def truncate(self, total: int | None = None, caps=None) -> "WerdenSeries":
        """Tighten the caps; dropping any nonzero term clears ``exact``."""
        new_caps = self.caps
        if caps is not None:
            if isinstance(caps, int):
                caps = (caps,) * len(self.gens)
            new_caps = tuple(_min_cap(x, y) for x, y in zip(self.caps, caps))
        total_cap = _min_cap(self.total_cap, total)
        acc = {d: c for d, c in self.terms.items()}
        return self._build(acc, new_caps, total_cap, self.exact)

    def without_constant(self) -> "WerdenSeries":
        zero = (0,) * len(self.gens)
        terms = {d: c for d, c in self.terms.items() if d != zero}
        return WerdenSeries(self.gens, terms, self.caps, self.total_cap, self.exact)

    def divide_by_monomial(self, degrees) -> "WerdenSeries":
        """Exact division by a generator monomial (degree shifting)."""
        shift = self._degrees(degrees)
        if shift is None:
            raise SeriesDivisionError("unknown generator in divisor")
        terms = {}
        for d, c in self.terms.items():
            nd = tuple(x - y for x, y in zip(d, shift))
            if min(nd, default=0) < 0:
                raise SeriesDivisionError(
                    f"term {to_string(c)} at degree {d} lacks the divisor's generator factors"
                )
            terms[nd] = c
        caps = tuple(None if c is None else c - s for c, s in zip(self.caps, shift))
        total_cap = None if self.total_cap is None else self.total_cap - sum(shift)
        return WerdenSeries(self.gens, terms, caps, total_cap, self.exact)

    def map_coefficients(self, fn) -> "WerdenSeries":
        acc = {d: [fn(c)] for d, c in self.terms.items()}
        return self._build(acc, self.caps, self.total_cap, self.exact)

    # -- conversions ------------------------------------------------------

    def monomial(self, degrees) -> Expr:
        return mul(*(power(g.symbol, k) for g, k in zip(self.gens, degrees) if k))

    def to_expr(self) -> Expr:
        """The series as one expression over base variables and generator symbols."""
        return add(*(mul(c, self.monomial(d)) for d, c in self.terms.items()))

    def at_zero(self) -> Expr:
        """Set every generator to zero."""
        return self.constant_term()

    def mentions(self) -> set:
        """Names of generators that occur with positive degree."""
        return {g.name for d in self.terms for g, k in zip(self.gens, d) if k}

    def format(self) -> str:
        """Readable rendering grouped by ascending generator degree."""
        if not self.terms:
            return "0"
        order = sorted(self.terms, key=lambda d: (sum(d), tuple(-k for k in d)))
        out = ""
        for i, d in enumerate(order):
            s = to_string(mul(self.terms[d], self.monomial(d)))
            if i == 0:
                out = s
            elif s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out

    def __str__(self):
        return self.format()

    def to_json(self) -> list:
        return [
            {"degrees": list(d), "coeff": to_string(c)}
            for d, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, items: Iterable[Mapping], gens, exact: bool = True) -> "WerdenSeries":
        gens = tuple(sorted(gens))
        acc = {}
        for item in items:
            d = tuple(int(k) for k in item["degrees"])
            if len(d) != len(gens):
                raise ValueError("degree vector length does not match generators")
            c = parse(item["coeff"])
            if c != ZERO:
                acc[d] = c
        return cls(gens, dict(sorted(acc.items())), exact=exact)


# ---------------------------------------------------------------------------
# elementary composition


def _taylor_coefficient(fn, c0: Expr, j: int) -> Expr:
    """(1/j!) * fn^(j)(c0)."""
    inv_fact = Fraction(1, math.factorial(j))
    if fn == "sin":
        sign, name = [(1, "sin"), (1, "cos"), (-1, "sin"), (-1, "cos")][j % 4]
        return mul(Const(sign * inv_fact), func(name, c0))
    if fn == "cos":
        sign, name = [(1, "cos"), (-1, "sin"), (-1, "cos"), (1, "sin")][j % 4]
        return mul(Const(sign * inv_fact), func(name, c0))
    if fn == "exp":
        return mul(Const(inv_fact), func("exp", c0))
    if fn == "ln":
        if j == 0:
            return func("ln", c0)
        return mul(Const(Fraction((-1) ** (j - 1), j)), power(c0, -j))
    p = Fraction(fn)
    binom = Fraction(1)
    for i in range(j):
        binom *= p - i
    binom *= inv_fact
    if binom == 0:
        return ZERO
    return mul(Const(binom), power(c0, p - j))


def compose_elementary(fn, s: WerdenSeries, K: int | None = DEFAULT_ORDER) -> WerdenSeries:
    """Taylor-expand ``fn(s)`` about the constant term of ``s`` through total degree K.

    ``fn`` is one of ``"sin"``, ``"cos"``, ``"exp"``, ``"ln"`` or a rational
    exponent.  ``K=None`` is only allowed when the expansion terminates
    (nonnegative integer exponent).
    """
    if K is not None and K < 1:
        raise ValueError("K must be >= 1")
    if isinstance(fn, str):
        if fn not in ELEMENTARY:
            raise ValueError(f"unknown elementary function {fn!r}")
        terminating = None
    else:
        fn = Fraction(fn)
        terminating = int(fn) if fn.denominator == 1 and fn >= 0 else None

    c0 = s.constant_term()
    rest = s.without_constant()
    if rest.is_zero():
        if fn == "ln" or (not isinstance(fn, str) and fn < 0):
            if c0 == ZERO:
                raise CompositionError(f"cannot compose {fn} with a zero constant term")
        value = func(fn, c0) if isinstance(fn, str) else power(c0, fn)
        return WerdenSeries(s.gens, {} if value == ZERO else {(0,) * len(s.gens): value},
                            s.caps, s.total_cap, s.exact)

    if c0 == ZERO and (fn == "ln" or (not isinstance(fn, str) and terminating is None)):
        raise CompositionError(f"cannot expand {fn} about a zero constant term")
    if terminating is not None:
        # finite binomial expansion: exact, no order cap of its own
        K = None
        top, exact = terminating, s.exact
    elif K is None:
        raise ValueError("an unbounded order needs a terminating expansion")
    else:
        top, exact = K, False
    base = WerdenSeries(s.gens, {}, s.caps, _min_cap(s.total_cap, K), True)
    result = base + WerdenSeries.constant(_taylor_coefficient(fn, c0, 0), s.gens)
    rest = rest.truncate(total=K)
    exact = exact and rest.exact
    rpow = None
    for j in range(1, top + 1):
        rpow = rest if rpow is None else (rpow * rest).truncate(total=K)
        coeff = _taylor_coefficient(fn, c0, j)
        if coeff != ZERO:
            result = result + rpow.scale(coeff)
    result = WerdenSeries(result.gens, result.terms, result.caps, result.total_cap,
                          exact and result.exact and (rpow is None or rpow.exact))
    return result


def expand(e: Expr, shifts: Mapping[str, Generator], K: int | None = DEFAULT_ORDER) -> WerdenSeries:
    """Series of ``e`` with each variable ``v`` in ``shifts`` replaced by ``v + shifts[v]``.

    Arithmetic is exact; only elementary compositions truncate at total
    degree K, so polynomial inputs come out exact at any K.
    """
    gens = tuple(sorted(shifts.values()))
    shifted = frozenset(shifts)
    memo: dict = {}

    def go(node: Expr) -> WerdenSeries:
        if node in memo:
            return memo[node]
        if not (node.free & shifted):
            out = WerdenSeries.constant(node, gens)
        elif isinstance(node, Var):
            out = WerdenSeries.constant(node, gens) + WerdenSeries.generator(shifts[node.name], gens)
        elif isinstance(node, Add):
            out = WerdenSeries.zero(gens)
            for t in node.terms:
                out = out + go(t)
        elif isinstance(node, Mul):
            out = WerdenSeries.constant(Const(node.coeff), gens)
            for f in node.factors:
                out = out * go(f)
        elif isinstance(node, Pow):
            out = compose_elementary(node.exp, go(node.base), K)
        elif isinstance(node, Func):
            out = compose_elementary(node.name, go(node.arg), K)
        else:
            raise TypeError(node)
        memo[node] = out
        return out

    return go(as_expr(e))
