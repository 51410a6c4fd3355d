"""Differentials as exact increments over infinitesimal generators.

The symbolic core (:mod:`werden.expr`) feeds a truncated power-series
engine (:mod:`werden.series`), on top of which :mod:`werden.calculus`
splits ``F(x + dx) - F(x)`` into static and restoring parts,
:mod:`werden.restore` recovers primitive families and
:mod:`werden.integrate` sums differentials over partitions.
"""

from .calculus import (
    chain_check,
    classical_derivative,
    dynamic_derivative,
    dynamic_differential,
    nth_dynamic_derivative,
    static_derivative,
    total_dynamic_differential,
)
from .errors import (
    CompositionError,
    DomainError,
    ExpressionSyntaxError,
    NoRuleApplies,
    ValidationError,
    WerdenError,
)
from .expr import evaluate, numeric_equal, parse, simplify, substitute
from .integrate import Partition, dynamic_sum, hypo_sum, integrate_piecewise, newton_leibniz, static_sum
from .restore import PrimitiveFamily, restore, restore_with_substitution, verify_family
from .series import Generator, WerdenSeries, compose_elementary

__version__ = "0.1.0"

__all__ = [
    "CompositionError",
    "DomainError",
    "ExpressionSyntaxError",
    "Generator",
    "NoRuleApplies",
    "Partition",
    "PrimitiveFamily",
    "ValidationError",
    "WerdenError",
    "WerdenSeries",
    "chain_check",
    "classical_derivative",
    "compose_elementary",
    "dynamic_derivative",
    "dynamic_differential",
    "dynamic_sum",
    "evaluate",
    "hypo_sum",
    "integrate_piecewise",
    "newton_leibniz",
    "nth_dynamic_derivative",
    "numeric_equal",
    "parse",
    "restore",
    "restore_with_substitution",
    "simplify",
    "static_derivative",
    "static_sum",
    "substitute",
    "total_dynamic_differential",
    "verify_family",
]
