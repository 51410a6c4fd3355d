"""Exception types shared across the package."""


class WerdenError(Exception):
    """Base class for engine errors."""


class ExpressionSyntaxError(SyntaxError, WerdenError):
    """Raised by the parser; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, text="", offset=0):
        super().__init__(message)
        self.msg = message
        self.text = text
        self.offset = offset

    def __str__(self):
        return f"{self.msg} at byte {self.offset}"


class DomainError(WerdenError, ArithmeticError):
    """Evaluation left the real domain (division by zero, ln of nonpositive...)."""


class UnboundVariable(WerdenError, KeyError):
    def __str__(self):
        return f"unbound variable {self.args[0]!r}"


class CompositionError(WerdenError):
    """Series composition needs a nonzero constant term that is missing."""


class SeriesDivisionError(WerdenError):
    """A term lacks the generator factors required by an exact division."""


class NoRuleApplies(WerdenError):
    """The restoring rule table cannot handle the integrand."""


class NonAffineInner(WerdenError):
    pass


class IndexOutOfRange(WerdenError, IndexError):
    pass


class BreakpointOutsideDomain(WerdenError):
    pass


class ValidationError(WerdenError, ValueError):
    """Bad user input (options, corpus entries)."""
