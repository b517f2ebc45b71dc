"""Exception hierarchy shared by every qif module."""

from __future__ import annotations


class QifError(Exception):
    """Base class for all analyzer errors."""


class DomainError(QifError, ValueError):
    """Index sets of two operands do not line up."""


class InvariantError(QifError, ValueError):
    """A value violates its type invariant (stochasticity, ordering, ...)."""


class UndefinedLeakage(QifError, ArithmeticError):
    """Leakage ratio is undefined because the prior vulnerability is not positive."""


class CapExceeded(QifError):
    """A configurable size cap was exceeded.

    The CLI maps this to a dedicated exit code so that exponential blow-ups
    are distinguishable from ordinary errors.
    """

    def __init__(self, cap: str, limit: int, requested: int):
        self.cap = cap
        self.limit = limit
        self.requested = requested
        super().__init__(f"{cap} cap exceeded: {requested} > {limit}")


class SourceError(QifError):
    """A problem in program text, located by line and column (both 1-based)."""

    kind = "error"

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{self.kind}: {message}")


class QifSyntaxError(SourceError):
    kind = "syntax error"


class QifTypeError(SourceError):
    kind = "type error"


class CompileError(SourceError):
    kind = "compile error"
