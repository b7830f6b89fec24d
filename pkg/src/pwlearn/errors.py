"""Exception types shared across the package."""


class Error(Exception):
    """Base class for all package-specific errors."""


class DomainError(Error, ValueError):
    """An argument lies outside its mathematical domain."""


class DuplicateConflict(Error, ValueError):
    """Two data points share a coordinate but disagree on the value."""


class PreconditionError(Error, ValueError):
    """A documented precondition of an operation was violated."""


class UnknownKind(Error, ValueError):
    """Requested a learner kind that does not exist."""


class DegenerateInput(Error, ValueError):
    """An input sequence repeats a coordinate where distinct points are required."""


class SequenceError(Error, RuntimeError):
    """Adversary trials were driven out of order, or its schedule invariant broke."""


class DivergenceError(Error, ArithmeticError):
    """A series ratio check failed; the closed form would not converge."""


class InequalityViolation(Error):
    """A numerically checked inequality came out negative."""


class AuditFailure(Error):
    """One or more audited invariants failed.

    ``violations`` lists every failure; ``report`` (when present) carries the
    full audit report for diagnostics.
    """

    def __init__(self, message, violations=(), report=None):
        super().__init__(message)
        self.violations = list(violations)
        self.report = report
