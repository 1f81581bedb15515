"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`MemoriumError`; the CLI maps the three families (configuration,
numerical, internal consistency) onto distinct exit codes.
"""

from __future__ import annotations


class MemoriumError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ConfigError(MemoriumError, ValueError):
    """Malformed input: bad shapes, bad values, unresolved names."""

    exit_code = 2

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.path = path


class ShapeError(ConfigError):
    """Array dimensions do not match the declared layout."""


class DomainError(ConfigError):
    """An argument lies outside the domain where an operation is defined."""


class ContinuityError(ConfigError):
    """A process does not end where the prolonged history begins."""

    def __init__(self, gap: float, tol: float):
        super().__init__(
            f"process terminal value differs from history initial value by {gap:.3e} (tol {tol:.1e})"
        )
        self.gap = gap
        self.tol = tol


class PreconditionError(ConfigError):
    """A documented precondition of an operation is violated."""


class NumericalError(MemoriumError, ArithmeticError):
    """A numerical procedure could not deliver a result."""

    exit_code = 3


class UnboundedBelow(NumericalError):
    """The work quadratic form is indefinite: its infimum is -inf.

    Under the dissipation postulate this cannot happen, so it signals a
    non-dissipative kernel.
    """

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"work quadratic form is indefinite (min eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


class BudgetExceeded(NumericalError):
    """An iterative procedure did not converge within its budget."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ConsistencyError(MemoriumError, AssertionError):
    """Two independent evaluation routes disagree beyond their error bounds.

    This indicates a bug in the package, not a user error.
    """

    exit_code = 4
