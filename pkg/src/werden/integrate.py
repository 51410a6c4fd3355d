"""Integration as summation of differentials over a partition.

* :func:`dynamic_sum` adds the full increments ``F(x_i) - F(x_{i-1})``, which
  telescope, so it is exact at every N up to rounding.
* :func:`static_sum` adds only the static parts ``f(x_{i-1}) * dx_i`` and
  converges to :func:`newton_leibniz` at first order.
* :func:`hypo_sum` drops finitely many terms of the static sum.

Sums are accumulated with ``math.fsum`` (correctly rounded), so reports are
bit-stable for a given input.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .calculus import loglog_slope
from .errors import BreakpointOutsideDomain, IndexOutOfRange, ValidationError
from .expr import Expr, as_expr, evaluate, evaluate_array, to_string
from .restore import restore


def _var_of(f: Expr, var: str | None) -> str:
    if var:
        return var
    if len(f.free) == 1:
        return next(iter(f.free))
    if not f.free:
        return "x"
    raise ValidationError(f"{to_string(f)} has several free variables; pass var=")


@dataclass(frozen=True)
class Partition:
    a: float
    b: float
    nodes: tuple
    scheme: str = "custom"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ValidationError("a partition needs at least one subinterval")
        if not np.all(np.diff(nodes) > 0):
            raise ValidationError("partition nodes must be strictly increasing")
        if nodes[0] != self.a or nodes[-1] != self.b:
            raise ValidationError("partition must start at a and end at b")

    @classmethod
    def uniform(cls, a: float, b: float, N: int) -> "Partition":
        if N < 1:
            raise ValidationError("N must be >= 1")
        if not b > a:
            raise ValidationError("uniform partition needs a < b")
        nodes = a + (b - a) * (np.arange(N + 1) / N)
        nodes[-1] = b
        return cls(float(a), float(b), tuple(nodes.tolist()), "uniform")

    @classmethod
    def from_nodes(cls, nodes: Sequence[float]) -> "Partition":
        nodes = [float(x) for x in nodes]
        return cls(nodes[0], nodes[-1], tuple(nodes), "custom")

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.nodes, dtype=float)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.array)

    def refined(self, extra: Iterable[float]) -> "Partition":
        """Add nodes (already present or outside (a, b) are ignored)."""
        pts = set(self.nodes)
        pts.update(x for x in extra if self.a < x < self.b)
        return Partition(self.a, self.b, tuple(sorted(pts)), "custom")

    def locate(self, points: Iterable[float]) -> list:
        """Index of the subinterval ``[x_i, x_{i+1})`` containing each point."""
        arr = self.array
        out = []
        for p in points:
            if not self.a <= p < self.b:
                raise IndexOutOfRange(f"point {p} outside [{self.a}, {self.b})")
            out.append(int(np.searchsorted(arr, p, side="right") - 1))
        return out


@dataclass
class SumReport:
    value: float
    N: int
    dropped: tuple = ()
    reference: float | None = None
    abs_err: float | None = None
    includes_alpha: bool = False
    kind: str = "static"
    full_value: float | None = None
    bound: float | None = None

    def __post_init__(self):
        if self.reference is not None and self.abs_err is None:
            self.abs_err = abs(self.value - self.reference)
        if len(self.dropped) > self.N:
            raise ValidationError("more dropped terms than subintervals")

    @property
    def bound_ok(self) -> bool | None:
        if self.bound is None or self.full_value is None:
            return None
        return abs(self.full_value - self.value) <= self.bound

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "value": self.value,
            "N": self.N,
            "dropped": list(self.dropped),
            "reference": self.reference,
            "abs_err": self.abs_err,
            "includes_alpha": self.includes_alpha,
        }
        if self.bound is not None:
            out.update(full_value=self.full_value, bound=self.bound, bound_ok=self.bound_ok)
        return out


class PrimitiveDifference(float):
    """``base(b) - base(a)``: a number, kept distinct from a primitive family."""

    def __new__(cls, value, base=None, a=None, b=None):
        obj = super().__new__(cls, value)
        obj.base, obj.a, obj.b = base, a, b
        return obj


def _values(e: Expr, var: str, xs: np.ndarray) -> np.ndarray:
    return np.broadcast_to(evaluate_array(e, {var: xs}), xs.shape)


def dynamic_sum(F, p: Partition, var: str | None = None) -> SumReport:
    """Sum of the exact increments ``F(x_i) - F(x_{i-1})``."""
    F = as_expr(F)
    var = _var_of(F, var)
    vals = _values(F, var, p.array)
    value = math.fsum(np.diff(vals).tolist())
    reference = float(vals[-1]) - float(vals[0])
    return SumReport(value, p.N, reference=reference, includes_alpha=True, kind="dynamic")


def static_terms(f, p: Partition, var: str | None = None) -> np.ndarray:
    """The terms ``f(x_{i-1}) * (x_i - x_{i-1})``."""
    f = as_expr(f)
    var = _var_of(f, var)
    return _values(f, var, p.array[:-1]) * p.widths


def static_sum(f, p: Partition, reference: float | None = None, var: str | None = None) -> SumReport:
    """Left-endpoint sum of static differentials."""
    value = math.fsum(static_terms(f, p, var).tolist())
    return SumReport(value, p.N, reference=reference, kind="static")


def newton_leibniz(f, a: float, b: float, var: str | None = None) -> PrimitiveDifference:
    """Difference of the restored base at the endpoints."""
    f = as_expr(f)
    var = _var_of(f, var)
    if a == b:
        return PrimitiveDifference(0.0, None, a, b)
    base = restore(f, var).base
    value = evaluate(base, {var: b}) - evaluate(base, {var: a})
    return PrimitiveDifference(value, base, a, b)


def hypo_sum(f, p: Partition, dropped: Iterable[int], var: str | None = None) -> SumReport:
    """Static sum without the terms at the ``dropped`` subinterval indices (0-based)."""
    dropped = tuple(sorted(set(int(i) for i in dropped)))
    for i in dropped:
        if not 0 <= i < p.N:
            raise IndexOutOfRange(f"dropped index {i} not in [0, {p.N})")
    f = as_expr(f)
    var = _var_of(f, var)
    left = _values(f, var, p.array[:-1])
    terms = left * p.widths
    keep = np.ones(p.N, dtype=bool)
    keep[list(dropped)] = False
    value = math.fsum(terms[keep].tolist())
    full = math.fsum(terms.tolist())
    bound = len(dropped) * float(np.max(np.abs(left))) * float(np.max(p.widths))
    return SumReport(value, p.N, dropped=dropped, kind="hypo", full_value=full, bound=bound)


def _check_pieces(pieces, a: float, b: float):
    pieces = [((float(lo), float(hi)), as_expr(e)) for (lo, hi), e in pieces]
    if not pieces:
        raise ValidationError("no pieces given")
    pieces.sort(key=lambda item: item[0][0])
    for (lo, hi), _ in pieces:
        if not hi > lo:
            raise ValidationError(f"empty piece [{lo}, {hi}]")
    for ((_, hi), _), ((lo, _), _) in zip(pieces, pieces[1:]):
        if hi != lo:
            raise ValidationError(f"pieces leave a gap or overlap at {hi}")
    breakpoints = [lo for (lo, _), _ in pieces[1:]]
    for x in breakpoints:
        if not a <= x <= b:
            raise BreakpointOutsideDomain(f"breakpoint {x} outside [{a}, {b}]")
    if pieces[0][0][0] > a or pieces[-1][0][1] < b:
        raise ValidationError(f"pieces do not cover [{a}, {b}]")
    return pieces, breakpoints


def pieced_primitive(pieces, a: float, b: float, var: str = "x"):
    """Continuous primitive ``F`` with ``F(a) = 0``, built piece by piece.

    Each piece's restored base gets the constant that matches the value
    reached at its left breakpoint.
    """
    pieces, _ = _check_pieces(pieces, a, b)
    segments = []
    offset = 0.0
    for (lo, hi), e in pieces:
        lo_c, hi_c = max(lo, a), min(hi, b)
        if hi_c <= lo_c:
            continue
        base = restore(e, var).base
        start = evaluate(base, {var: lo_c})
        segments.append((lo_c, hi_c, base, offset - start))
        offset = offset + evaluate(base, {var: hi_c}) - start

    def F(x: float) -> float:
        for lo_c, hi_c, base, c in segments:
            if lo_c <= x <= hi_c:
                return evaluate(base, {var: x}) + c
        raise ValidationError(f"{x} outside [{a}, {b}]")

    return F


def integrate_piecewise(pieces, a: float, b: float, N: int, var: str = "x") -> SumReport:
    """Static sum of a piecewise integrand on a partition that contains every breakpoint."""
    pieces, breakpoints = _check_pieces(pieces, a, b)
    p = Partition.uniform(a, b, N).refined(breakpoints)
    left = p.array[:-1]
    vals = np.full(left.shape, np.nan)
    for k, ((lo, hi), e) in enumerate(pieces):
        last = k == len(pieces) - 1
        mask = (left >= lo) & ((left <= hi) if last else (left < hi))
        mask &= np.isnan(vals)
        if mask.any():
            vals[mask] = _values(e, var, left[mask])
    value = math.fsum((vals * p.widths).tolist())
    reference = pieced_primitive(pieces, a, b, var)(b)
    return SumReport(value, p.N, reference=reference, kind="piecewise")


# ---------------------------------------------------------------------------
# convergence studies


@dataclass
class StudyRow:
    N: int
    value: float
    reference: float
    abs_err: float
    slope_estimate: float | None


def convergence_study(f, a: float, b: float, Ns: Sequence[int], reference: float | None = None,
                      var: str | None = None) -> list:
    """Static sums at increasing N; slope_estimate is the local log-log slope."""
    f = as_expr(f)
    var = _var_of(f, var)
    if reference is None:
        reference = float(newton_leibniz(f, a, b, var))
    rows = []
    for N in Ns:
        rep = static_sum(f, Partition.uniform(a, b, N), reference, var)
        slope = None
        if rows and rows[-1].abs_err > 0 and rep.abs_err > 0:
            slope = math.log(rep.abs_err / rows[-1].abs_err) / math.log(N / rows[-1].N)
        rows.append(StudyRow(N, rep.value, reference, rep.abs_err, slope))
    return rows


def fitted_order(rows: Sequence[StudyRow]) -> float:
    """Convergence order, i.e. minus the least-squares log-log slope of error against N."""
    return -loglog_slope([r.N for r in rows], [r.abs_err for r in rows])


def study_csv(rows: Sequence[StudyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "value", "reference", "abs_err", "slope_estimate"])
    for r in rows:
        w.writerow([r.N, repr(r.value), repr(r.reference), repr(r.abs_err),
                    "" if r.slope_estimate is None else repr(r.slope_estimate)])
    return buf.getvalue()
