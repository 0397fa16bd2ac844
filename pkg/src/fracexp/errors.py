"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: usage/guard problems exit 2, numerical
failures exit 3 and domain violations exit 4.
"""

from __future__ import annotations


class FracExpError(Exception):
    """Base class for all library errors."""


class DomainError(FracExpError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericalError(FracExpError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``estimate`` and ``error`` carry the best value and error estimate that
    were achieved, when available.
    """

    def __init__(self, message: str, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ResourceError(FracExpError, ValueError):
    """A combinatorial or dimension guard was exceeded."""


class ExprSyntaxError(FracExpError, ValueError):
    """Raised by the expression parser.

    ``offset`` is the byte offset of the offending token and ``expected``
    lists what the parser would have accepted there.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected {', '.join(expected)})"
        super().__init__(detail)
        self.offset = offset
        self.expected = expected


class ExprDomainError(DomainError):
    """Evaluation of an expression left the domain of an elementary function."""

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression
