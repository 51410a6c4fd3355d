"""Immutable symbolic expressions over real variables with exact rational constants.

Trees are only ever built through the smart constructors :func:`add`,
:func:`mul`, :func:`power` and :func:`func`, which keep them canonical:

* sums and products are flattened, like terms/factors merged, and sorted;
* rational constants are folded, products are fully distributed over sums,
  and sums raised to positive integer powers are expanded;
* negation is ``Mul(-1, e)`` and a quotient ``a/b`` is ``a * b^-1``.

Structural equality (``==``) of canonical trees is therefore a useful, if
incomplete, equality test.  :func:`numeric_equal` is the fallback.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError, ExpressionSyntaxError, UnboundVariable

FUNCTIONS = ("sin", "cos", "exp", "ln")

# generator-like names (dx, dt, d1x, d2x) print after ordinary variables
_GENERATOR_NAME = re.compile(r"^d\d*[A-Za-z]$")


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    @property
    def free(self) -> frozenset:
        raise NotImplementedError


@dataclass(frozen=True, eq=True, repr=False)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("C", self.value)))

    def __hash__(self):
        return self._hash

    @property
    def free(self):
        return frozenset()

    @cached_property
    def key(self):
        return (1, self.value)


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expr):
    name: str

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("V", self.name)))

    def __hash__(self):
        return self._hash

    @cached_property
    def free(self):
        return frozenset((self.name,))

    @cached_property
    def key(self):
        return (4 if _GENERATOR_NAME.match(self.name) else 0, self.name)


@dataclass(frozen=True, eq=True, repr=False)
class Add(Expr):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("A", self.terms)))

    def __hash__(self):
        return self._hash

    @cached_property
    def free(self):
        return frozenset().union(*(t.free for t in self.terms))

    @cached_property
    def key(self):
        return (3, tuple(t.key for t in self.terms))


@dataclass(frozen=True, eq=True, repr=False)
class Mul(Expr):
    """``coeff * prod(factors)``; factors are atoms or powers of atoms."""

    coeff: Fraction
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("M", self.coeff, self.factors)))

    def __hash__(self):
        return self._hash

    @cached_property
    def free(self):
        return frozenset().union(*(f.free for f in self.factors))

    @cached_property
    def key(self):
        return (6, self.coeff, tuple(f.key for f in self.factors))


@dataclass(frozen=True, eq=True, repr=False)
class Pow(Expr):
    base: Expr
    exp: Fraction

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("P", self.base, self.exp)))

    def __hash__(self):
        return self._hash

    @property
    def free(self):
        return self.base.free

    @cached_property
    def key(self):
        return (5, self.base.key, self.exp)


@dataclass(frozen=True, eq=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("F", self.name, self.arg)))

    def __hash__(self):
        return self._hash

    @property
    def free(self):
        return self.arg.free

    @cached_property
    def key(self):
        return (2, self.name, self.arg.key)


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(value) -> Const:
    return Const(Fraction(value))


def var(name: str) -> Var:
    return Var(name)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    if isinstance(value, float):
        return Const(Fraction(value))
    if isinstance(value, str):
        return parse(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


# ---------------------------------------------------------------------------
# canonical constructors


def _split_term(t: Expr):
    """Return ``(coefficient, monomial)``; monomial is None for constants."""
    if isinstance(t, Const):
        return t.value, None
    if isinstance(t, Mul):
        if len(t.factors) == 1:
            return t.coeff, t.factors[0]
        return t.coeff, Mul(Fraction(1), t.factors)
    return Fraction(1), t


def _make_term(c: Fraction, mono):
    if mono is None:
        return Const(c)
    if c == 1:
        return mono
    if isinstance(mono, Mul):
        return Mul(c, mono.factors)
    return Mul(c, (mono,))


def _split_power(f: Expr):
    if isinstance(f, Pow):
        return f.base, f.exp
    return f, Fraction(1)


def _factor_key(f: Expr):
    base, e = _split_power(f)
    return (base.key, -e)


def _term_order(t: Expr):
    _, mono = _split_term(t)
    if mono is None:
        return (Fraction(0), ())
    factors = mono.factors if isinstance(mono, Mul) else (mono,)
    degree = sum((_split_power(f)[1] for f in factors), Fraction(0))
    return (-degree, tuple(_factor_key(f) for f in factors))


def add(*args: Expr) -> Expr:
    coeffs: dict = {}
    constant = Fraction(0)
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Add):
            stack.extend(a.terms)
            continue
        c, mono = _split_term(a)
        if mono is None:
            constant += c
        else:
            coeffs[mono] = coeffs.get(mono, 0) + c
    terms = [_make_term(c, m) for m, c in coeffs.items() if c != 0]
    if constant != 0:
        terms.append(Const(constant))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=_term_order)
    return Add(tuple(terms))


def mul(*args: Expr) -> Expr:
    coeff = Fraction(1)
    factors = []
    sums = []
    for a in args:
        if isinstance(a, Const):
            coeff *= a.value
        elif isinstance(a, Mul):
            coeff *= a.coeff
            factors.extend(a.factors)
        elif isinstance(a, Add):
            sums.append(a)
        else:
            factors.append(a)
    if coeff == 0:
        return ZERO
    if sums:
        acc = mul(Const(coeff), *factors)
        for s in sums:
            acc_terms = acc.terms if isinstance(acc, Add) else (acc,)
            acc = add(*(mul(t, u) for t in acc_terms for u in s.terms))
        return acc

    exponents: dict = {}
    for f in factors:
        base, e = _split_power(f)
        exponents[base] = exponents.get(base, 0) + e
    out = []
    again = False
    for base, e in exponents.items():
        if e == 0:
            continue
        p = power(base, e)
        if isinstance(p, (Const, Mul, Add)):
            again = True
        out.append(p)
    if again:
        return mul(Const(coeff), *out)
    if not out:
        return Const(coeff)
    if len(out) == 1 and coeff == 1:
        return out[0]
    out.sort(key=_factor_key)
    return Mul(coeff, tuple(out))


def neg(e: Expr) -> Expr:
    return mul(Const(Fraction(-1)), e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, power(b, -1))


def _int_root(n: int, q: int):
    """Exact integer q-th root of n >= 0, or None."""
    if n < 2:
        return n
    r = round(n ** (1.0 / q)) if n.bit_length() < 1000 else int(math.isqrt(n))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == n:
            return cand
    # Newton fallback for very large n
    x = 1 << ((n.bit_length() + q - 1) // q)
    while True:
        y = ((q - 1) * x + n // x ** (q - 1)) // q
        if y >= x:
            break
        x = y
    return x if x**q == n else None


def _const_power(c: Fraction, e: Fraction) -> Expr:
    if c == 0:
        if e > 0:
            return ZERO
        raise DomainError("division by zero")
    if e.denominator == 1:
        return Const(c ** int(e))
    if c < 0:
        return Pow(Const(c), e)
    q = e.denominator
    rn, rd = _int_root(c.numerator, q), _int_root(c.denominator, q)
    if rn is not None and rd is not None:
        return Const(Fraction(rn, rd) ** e.numerator)
    whole = math.floor(e)
    rest = e - whole
    if whole == 0:
        return Pow(Const(c), e)
    return mul(Const(c**whole), Pow(Const(c), rest))


def power(base: Expr, exponent) -> Expr:
    """``base ** exponent`` for a rational exponent.

    Non-integer exponents assume a positive base, so ``(a*b)^e`` distributes
    and ``(a^p)^q`` collapses to ``a^(p*q)``.
    """
    e = Fraction(exponent)
    base = as_expr(base)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Const):
        return _const_power(base.value, e)
    if isinstance(base, Pow):
        return power(base.base, base.exp * e)
    if isinstance(base, Mul):
        return mul(_const_power(base.coeff, e), *(power(f, e) for f in base.factors))
    if isinstance(base, Add) and e.denominator == 1 and e > 0:
        result = ONE
        sq = base
        n = int(e)
        while n:
            if n & 1:
                result = mul(result, sq)
            n >>= 1
            if n:
                sq = mul(sq, sq)
        return result
    return Pow(base, e)


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    arg = as_expr(arg)
    if isinstance(arg, Const):
        if arg.value == 0 and name in ("sin", "cos", "exp"):
            return ZERO if name == "sin" else ONE
        if arg.value == 1 and name == "ln":
            return ZERO
    if name == "ln" and isinstance(arg, Func) and arg.name == "exp":
        return arg.arg
    return Func(name, arg)


def sin(u) -> Expr:
    return func("sin", as_expr(u))


def cos(u) -> Expr:
    return func("cos", as_expr(u))


def exp(u) -> Expr:
    return func("exp", as_expr(u))


def ln(u) -> Expr:
    return func("ln", as_expr(u))


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` through the canonical constructors."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Add):
        return add(*(simplify(t) for t in e.terms))
    if isinstance(e, Mul):
        return mul(Const(e.coeff), *(simplify(f) for f in e.factors))
    if isinstance(e, Pow):
        return power(simplify(e.base), e.exp)
    if isinstance(e, Func):
        return func(e.name, simplify(e.arg))
    raise TypeError(e)


def subs(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous substitution of variables, canonicalized."""
    if not (e.free & mapping.keys()):
        return e
    if isinstance(e, Var):
        return as_expr(mapping[e.name])
    if isinstance(e, Add):
        return add(*(subs(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(Const(e.coeff), *(subs(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return power(subs(e.base, mapping), e.exp)
    if isinstance(e, Func):
        return func(e.name, subs(e.arg, mapping))
    raise TypeError(e)


def substitute(e: Expr, name: str, replacement) -> Expr:
    return subs(e, {name: as_expr(replacement)})


def free_vars(e: Expr) -> frozenset:
    return e.free


def is_polynomial(e: Expr) -> bool:
    """True when ``e`` only uses +, * and nonnegative integer powers."""
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, Add):
        return all(is_polynomial(t) for t in e.terms)
    if isinstance(e, Mul):
        return all(is_polynomial(f) for f in e.factors)
    if isinstance(e, Pow):
        return e.exp.denominator == 1 and e.exp > 0 and is_polynomial(e.base)
    return False


# ---------------------------------------------------------------------------
# printing


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _base_str(b: Expr) -> str:
    if isinstance(b, Var):
        return b.name
    if isinstance(b, Func):
        return f"{b.name}({to_string(b.arg)})"
    if isinstance(b, Const):
        if b.value.denominator == 1 and b.value >= 0:
            return str(b.value.numerator)
        return f"({_frac_str(b.value)})"
    return f"({to_string(b)})"


def _factor_str(base: Expr, e: Fraction) -> str:
    b = _base_str(base)
    if e == 1:
        return b
    if e.denominator == 1 and e > 0:
        return f"{b}^{e.numerator}"
    return f"{b}^({_frac_str(e)})"


def _term_str(t: Expr) -> str:
    if isinstance(t, Const):
        return _frac_str(t.value)
    coeff, mono = _split_term(t)
    factors = mono.factors if isinstance(mono, Mul) else (mono,)
    num, den = [], []
    for f in factors:
        base, e = _split_power(f)
        if e > 0:
            num.append(_factor_str(base, e))
        else:
            den.append(_factor_str(base, -e))
    if num:
        if coeff == 1:
            s = "*".join(num)
        elif coeff == -1:
            s = "-" + "*".join(num)
        else:
            s = _frac_str(coeff) + "*" + "*".join(num)
    else:
        s = _frac_str(coeff)
    for d in den:
        s += "/" + d
    return s


def to_string(e: Expr) -> str:
    """Canonical printer; its output is accepted by :func:`parse`."""
    if not isinstance(e, Add):
        return _term_str(e)
    parts = []
    for i, t in enumerate(e.terms):
        c, _ = _split_term(t)
        if i == 0:
            parts.append(_term_str(t))
        elif c < 0:
            parts.append(" - " + _term_str(neg(t)))
        else:
            parts.append(" + " + _term_str(t))
    return "".join(parts)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                self.fail(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def fail(self, message, pos):
        raise ExpressionSyntaxError(message, self.text, len(self.text[:pos].encode()))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value or kind != "op":
            self.fail(f"expected {value!r}", pos)

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.fail("empty expression", 0)
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            self.fail(f"unexpected {v!r}", pos)
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else neg(t))
        return add(*terms)

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op, pos = self.take()[1:]
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                try:
                    e = div(e, rhs)
                except DomainError:
                    self.fail("division by zero", pos)
        return e

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v in ("-", "+"):
            self.take()
            inner = self.unary()
            return neg(inner) if v == "-" else inner
        return self.factor()

    def factor(self):
        base = self.atom()
        kind, v, pos = self.peek()
        if kind == "op" and v == "^":
            self.take()
            e = self.exponent()
            try:
                return power(base, e)
            except DomainError:
                self.fail("zero raised to a negative power", pos)
        return base

    def exponent(self) -> Fraction:
        kind, v, pos = self.take()
        sign = 1
        if kind == "op" and v in ("-", "+"):
            sign = -1 if v == "-" else 1
            kind, v, pos = self.take()
        if kind == "num":
            return sign * Fraction(v)
        if kind == "op" and v == "(":
            inner = self.expr()
            self.expect(")")
            if not isinstance(inner, Const):
                self.fail("exponent must be a rational constant", pos)
            return sign * inner.value
        self.fail("expected a rational exponent", pos)

    def atom(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Const(Fraction(v))
        if kind == "name":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if v not in FUNCTIONS:
                    self.fail(f"unknown function {v!r}", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return func(v, arg)
            if v in FUNCTIONS:
                self.fail(f"function {v!r} needs an argument", pos)
            return Var(v)
        if kind == "op" and v == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            self.fail("unexpected end of input", pos)
        self.fail(f"unexpected {v!r}", pos)


def parse(text: str) -> Expr:
    """Parse ``text`` into a canonical expression.

    >>> str(parse("(1 - cos(2*x))/2"))
    '-1/2*cos(2*x) + 1/2'
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation


def _ev(e: Expr, env, guard: float, why: list):
    """Vectorized evaluation returning ``(values, ok_mask)``."""
    if isinstance(e, Const):
        return float(e.value), True
    if isinstance(e, Var):
        try:
            return env[e.name], True
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Add):
        total, ok = 0.0, True
        for t in e.terms:
            v, k = _ev(t, env, guard, why)
            total = total + v
            ok = ok & k
        return total, ok
    if isinstance(e, Mul):
        prod, ok = float(e.coeff), True
        for f in e.factors:
            v, k = _ev(f, env, guard, why)
            prod = prod * v
            ok = ok & k
        return prod, ok
    if isinstance(e, Pow):
        b, ok = _ev(e.base, env, guard, why)
        p = e.exp
        if p < 0:
            good = np.abs(b) > guard
            if not np.all(good):
                why.append("division by zero")
            ok = ok & good
        if p.denominator != 1:
            good = b > 0 if p < 0 else b >= 0
            if not np.all(good):
                why.append("non-integer power of a negative base")
            ok = ok & good
            b = np.where(good, b, 1.0)
            val = np.power(b, float(p))
        else:
            b = np.where(ok, b, 1.0)
            val = np.power(b, float(p)) if p < 0 else b ** int(p)
        return val, ok
    if isinstance(e, Func):
        a, ok = _ev(e.arg, env, guard, why)
        if e.name == "sin":
            return np.sin(a), ok
        if e.name == "cos":
            return np.cos(a), ok
        if e.name == "exp":
            return np.exp(a), ok
        good = a > guard
        if not np.all(good):
            why.append("ln of a nonpositive argument")
        ok = ok & good
        return np.log(np.where(good, a, 1.0)), ok
    raise TypeError(e)


def _evaluate_masked(e: Expr, bindings: Mapping, guard: float = 0.0):
    env = {k: np.asarray(v, dtype=float) for k, v in bindings.items()}
    why: list = []
    with np.errstate(all="ignore"):
        val, ok = _ev(e, env, guard, why)
        val = np.asarray(val, dtype=float)
        finite = np.isfinite(val)
        if not np.all(finite):
            why.append("overflow or undefined value")
        ok = np.asarray(ok & finite)
    if ok.shape != val.shape:
        ok = np.broadcast_to(ok, val.shape)
    return val, ok, why


def evaluate(e: Expr, bindings: Mapping[str, float] | None = None, **kwargs) -> float:
    """Evaluate ``e`` at a point; raises DomainError or UnboundVariable."""
    env = dict(bindings or {}, **kwargs)
    val, ok, why = _evaluate_masked(e, env)
    if not np.all(ok):
        raise DomainError(f"{why[0] if why else 'undefined'} in {to_string(e)}")
    return float(val)


def evaluate_array(e: Expr, bindings: Mapping[str, np.ndarray], guard: float = 0.0) -> np.ndarray:
    """Evaluate ``e`` elementwise over arrays of bindings."""
    shapes = [np.shape(v) for v in bindings.values()]
    val, ok, why = _evaluate_masked(e, bindings, guard)
    if shapes and val.shape != np.broadcast_shapes(*shapes):
        val = np.broadcast_to(val, np.broadcast_shapes(*shapes)).copy()
    if not np.all(ok):
        bad = int(np.flatnonzero(~np.asarray(ok).ravel())[0])
        where = {k: float(np.ravel(np.broadcast_to(v, val.shape))[bad]) for k, v in bindings.items()}
        raise DomainError(f"{why[0] if why else 'undefined'} in {to_string(e)} at {where}")
    return val


# ---------------------------------------------------------------------------
# numeric oracle

SINGULARITY_GUARD = 1e-3
MAX_RETRIES = 16


def sample_points(names: Iterable[str], exprs: Iterable[Expr], sample_count: int = 128,
                  seed: int = 42, domain: tuple = (-3.0, 3.0)) -> dict:
    """Draw reproducible sample bindings at which every expression is defined.

    Points where any expression is undefined, or within the singularity guard
    of a pole or a logarithm's boundary, are redrawn up to ``MAX_RETRIES``
    times before giving up with DomainError.
    """
    names = sorted(names)
    exprs = list(exprs)
    rng = np.random.default_rng(seed)
    lo, hi = domain
    pts = {n: rng.uniform(lo, hi, sample_count) for n in names}
    for attempt in range(MAX_RETRIES + 1):
        bad = np.zeros(sample_count, dtype=bool)
        for e in exprs:
            _, ok, _ = _evaluate_masked(e, pts, SINGULARITY_GUARD)
            bad |= ~np.broadcast_to(ok, (sample_count,))
        if not bad.any():
            return pts
        if attempt == MAX_RETRIES:
            break
        k = int(bad.sum())
        for n in names:
            pts[n] = pts[n].copy()
            pts[n][bad] = rng.uniform(lo, hi, k)
    raise DomainError(f"no valid sample found after {MAX_RETRIES} retries")


def max_abs_difference(a: Expr, b: Expr, sample_count: int = 128, *, seed: int = 42,
                       domain: tuple = (-3.0, 3.0)) -> float:
    a, b = as_expr(a), as_expr(b)
    pts = sample_points(a.free | b.free, (a, b), sample_count, seed, domain)
    if not pts:
        return abs(evaluate(a) - evaluate(b))
    va = evaluate_array(a, pts)
    vb = evaluate_array(b, pts)
    return float(np.max(np.abs(va - vb)))


def numeric_equal(a: Expr, b: Expr, sample_count: int = 128, tol: float = 1e-9, *,
                  seed: int = 42, domain: tuple = (-3.0, 3.0)) -> bool:
    """True iff ``|a - b| <= tol`` at every sampled binding."""
    return max_abs_difference(a, b, sample_count, seed=seed, domain=domain) <= tol
