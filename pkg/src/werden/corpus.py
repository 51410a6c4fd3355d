"""The plain-text verification corpus."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, ExpressionSyntaxError, ValidationError
from .expr import Add, Expr, evaluate_array, parse, substitute, to_string

GRID_POINTS = 4097


@dataclass(frozen=True)
class FuncEntry:
    expr: Expr
    a: float
    b: float
    tags: frozenset = frozenset()
    var: str = "x"

    @property
    def label(self) -> str:
        return to_string(self.expr)


@dataclass(frozen=True)
class ChainEntry:
    outer: Expr
    inner: Expr
    a: float
    b: float
    tags: frozenset = frozenset()

    @property
    def label(self) -> str:
        inner = to_string(self.inner)
        if isinstance(self.inner, Add):
            inner = f"({inner})"
        return f"{to_string(self.outer)} o {inner}"


@dataclass
class VerifyCorpus:
    entries: list = field(default_factory=list)

    @property
    def functions(self) -> list:
        return [e for e in self.entries if isinstance(e, FuncEntry)]

    @property
    def chains(self) -> list:
        return [e for e in self.entries if isinstance(e, ChainEntry)]


def _check_defined(e: Expr, a: float, b: float, where: str) -> None:
    names = sorted(e.free)
    if len(names) > 1:
        raise ValidationError(f"{where}: {to_string(e)} has more than one variable")
    grid = np.linspace(a, b, GRID_POINTS)
    try:
        evaluate_array(e, {n: grid for n in names})
    except DomainError as exc:
        raise ValidationError(f"{where}: {to_string(e)} is singular on [{a}, {b}] ({exc})") from None


def _parse_field(text: str, where: str) -> Expr:
    try:
        return parse(text)
    except ExpressionSyntaxError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def parse_corpus(text: str, source: str = "<corpus>") -> VerifyCorpus:
    corpus = VerifyCorpus()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        cols = [c.strip() for c in line.split("|")]
        kind = cols[0]
        try:
            if kind == "func":
                expr = _parse_field(cols[1], where)
                a, b = float(cols[2]), float(cols[3])
                tags = frozenset(cols[4].split()) if len(cols) > 4 else frozenset()
                var = next(iter(expr.free)) if len(expr.free) == 1 else "x"
                entry = FuncEntry(expr, a, b, tags, var)
                checks = [expr]
            elif kind == "chain":
                outer, inner = _parse_field(cols[1], where), _parse_field(cols[2], where)
                a, b = float(cols[3]), float(cols[4])
                tags = frozenset(cols[5].split()) if len(cols) > 5 else frozenset()
                entry = ChainEntry(outer, inner, a, b, tags)
                y = next(iter(outer.free)) if outer.free else "y"
                checks = [inner, substitute(outer, y, inner)]
            else:
                raise ValidationError(f"{where}: unknown entry kind {kind!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{where}: malformed entry ({exc})") from None
        if not a < b:
            raise ValidationError(f"{where}: interval needs a < b")
        for e in checks:
            _check_defined(e, a, b, where)
        corpus.entries.append(entry)
    return corpus


def load_corpus(path: str | Path | None = None) -> VerifyCorpus:
    """Load a corpus file; ``None`` means the corpus shipped with the package."""
    if path is None:
        text = resources.files("werden").joinpath("data/corpus.txt").read_text()
        return parse_corpus(text, "corpus.txt")
    p = Path(path)
    return parse_corpus(p.read_text(), str(p))
