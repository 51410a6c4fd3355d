"""Rule-based restoring of a derived function to its family of primitives.

The rule table is deliberately small and ordered:

1. ``sin(u)^2 -> (1 - cos(2u))/2`` and ``cos(u)^2 -> (1 + cos(2u))/2``
   (even powers likewise), applied before any matching;
2. linearity: sums split, factors free of the variable pulled out;
3. power rule ``x^e -> x^(e+1)/(e+1)`` for ``e != -1`` and ``1/x -> ln(x)``;
4. ``sin``, ``cos``, ``exp`` of the variable;
5. any of the above applied to an affine inner ``a*x + b``, divided by ``a``.

Anything else raises :class:`NoRuleApplies`; there is no numeric fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import classical_derivative, static_derivative
from .errors import NoRuleApplies, NonAffineInner
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
    div,
    func,
    max_abs_difference,
    mul,
    neg,
    power,
    sub,
    subs,
    substitute,
    to_string,
)


@dataclass(frozen=True)
class PrimitiveFamily:
    """``base + C``: every primitive of the integrand, never a single one."""

    base: Expr
    restore_var: str
    constant_marker: str = "C"

    def render(self) -> str:
        if self.base == ZERO:
            return self.constant_marker
        return f"{to_string(self.base)} + {self.constant_marker}"

    def __str__(self):
        return self.render()

    def to_json(self) -> dict:
        return {"base": to_string(self.base), "var": self.restore_var,
                "constant": self.constant_marker, "family": self.render()}


def _halve_square(name: str, u: Expr) -> Expr:
    c2 = func("cos", mul(Const(Fraction(2)), u))
    sign = -1 if name == "sin" else 1
    return add(Const(Fraction(1, 2)), mul(Const(Fraction(sign, 2)), c2))


def rewrite_squares(e: Expr) -> Expr:
    """Replace even powers of sin/cos by double-angle forms, to a fixed point."""
    def once(node: Expr) -> Expr:
        if isinstance(node, (Const, Var)):
            return node
        if isinstance(node, Add):
            return add(*(once(t) for t in node.terms))
        if isinstance(node, Mul):
            return mul(Const(node.coeff), *(once(f) for f in node.factors))
        if isinstance(node, Pow):
            b = node.base
            if (isinstance(b, Func) and b.name in ("sin", "cos")
                    and node.exp.denominator == 1 and node.exp > 0 and node.exp % 2 == 0):
                return power(_halve_square(b.name, once(b.arg)), node.exp / 2)
            return power(once(b), node.exp)
        if isinstance(node, Func):
            return func(node.name, once(node.arg))
        raise TypeError(node)

    while True:
        nxt = once(e)
        if nxt == e:
            return e
        e = nxt


def _fresh_name(taken) -> str:
    for cand in ("u", "w", "v", "s"):
        if cand not in taken:
            return cand
    i = 0
    while f"u{i}" in taken:
        i += 1
    return f"u{i}"


def _affine_slope(inner: Expr, var: str):
    """Return ``(a, b)`` with ``inner = a*var + b``, or raise NonAffineInner."""
    if var not in inner.free:
        raise NonAffineInner(f"{to_string(inner)} does not depend on {var}")
    slope = classical_derivative(inner, var)
    if var in slope.free or slope == ZERO:
        raise NonAffineInner(f"{to_string(inner)} is not affine in {var}")
    return slope, substitute(inner, var, ZERO)


def _restore_atom(a: Expr, var: str) -> Expr:
    x = Var(var)
    if a == x:
        return mul(Const(Fraction(1, 2)), power(x, 2))
    if isinstance(a, Pow):
        if a.base == x:
            if a.exp == -1:
                return func("ln", x)
            return mul(Const(1 / (a.exp + 1)), power(x, a.exp + 1))
        if _is_affine(a.base, var):
            return restore_with_substitution(a, var, a.base).base
    if isinstance(a, Func) and a.name in ("sin", "cos", "exp"):
        if a.arg == x:
            if a.name == "sin":
                return neg(func("cos", x))
            return func("sin" if a.name == "cos" else "exp", x)
        if _is_affine(a.arg, var):
            return restore_with_substitution(a, var, a.arg).base
    raise NoRuleApplies(f"no restoring rule for {to_string(a)} in {var}")


def _is_affine(e: Expr, var: str) -> bool:
    try:
        _affine_slope(e, var)
    except NonAffineInner:
        return False
    return True


def _restore(e: Expr, var: str) -> Expr:
    if var not in e.free:
        return mul(e, Var(var))
    if isinstance(e, Add):
        return add(*(_restore(t, var) for t in e.terms))
    if isinstance(e, Mul):
        outside = [f for f in e.factors if var not in f.free]
        inside = [f for f in e.factors if var in f.free]
        if len(inside) > 1:
            raise NoRuleApplies(f"no restoring rule for the product {to_string(e)}")
        return mul(Const(e.coeff), *outside, _restore_atom(inside[0], var))
    return _restore_atom(e, var)


def _drop_constant(base: Expr, var: str) -> Expr:
    if isinstance(base, Add):
        return add(*(t for t in base.terms if var in t.free))
    return base if var in base.free else ZERO


def restore(f, var: str = "x") -> PrimitiveFamily:
    """Family of primitives ``base + C`` whose derivative is ``f``."""
    f = as_expr(f)
    base = _restore(rewrite_squares(f), var)
    return PrimitiveFamily(_drop_constant(base, var), var)


def restore_with_substitution(f, var: str, inner) -> PrimitiveFamily:
    """Restore with respect to ``u = inner`` (affine in ``var``), then divide by the slope."""
    f, inner = as_expr(f), as_expr(inner)
    a, b = _affine_slope(inner, var)
    u = _fresh_name(f.free | inner.free | {var})
    in_u = substitute(f, var, div(sub(Var(u), b), a))
    base_u = _restore(rewrite_squares(in_u), u)
    base = div(substitute(base_u, u, inner), a)
    return PrimitiveFamily(_drop_constant(base, var), var)


@dataclass
class FamilyReport:
    family: str
    derivative: str
    integrand: str
    structural: bool
    max_abs_err: float
    numeric: bool
    verdict: str
    kind: str = "family"

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_family(p: PrimitiveFamily, f, tol: float = 1e-9, sample_count: int = 128,
                  seed: int = 42, domain=(-3.0, 3.0)) -> FamilyReport:
    """Differentiate the base back and compare with ``f`` structurally and numerically."""
    f = as_expr(f)
    d = static_derivative(p.base, p.restore_var)
    structural = d == f
    err = max_abs_difference(d, f, sample_count, seed=seed, domain=domain)
    numeric = err <= tol
    return FamilyReport(
        family=p.render(),
        derivative=to_string(d),
        integrand=to_string(f),
        structural=structural,
        max_abs_err=err,
        numeric=numeric,
        verdict="pass" if structural or numeric else "fail",
    )
