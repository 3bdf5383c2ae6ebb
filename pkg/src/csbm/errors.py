"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: UsageError -> 1, DomainError (and
subclasses) -> 2, anything else -> 3.
"""


class CsbmError(Exception):
    """Base class for all toolkit errors."""


class UsageError(CsbmError):
    """Bad command-line or config usage."""


class DomainError(CsbmError):
    """Parameters outside the mathematical domain of an operation."""


class ConfigurationError(DomainError):
    """A channel carries no signal for the requested computation."""


class BudgetExceededError(DomainError):
    """Exact enumeration refused because the cycle/path count is too large."""

    def __init__(self, count, budget):
        self.count = count
        self.budget = budget
        super().__init__(
            f"exact enumeration would visit {count} objects, over budget {budget}"
        )


class OracleLimitError(DomainError):
    """Brute-force oracle invoked beyond its size guard."""


class InfeasibleAtFloorError(DomainError):
    """Correlation-matrix fit still infeasible at the delta-prime floor."""


class InstanceFormatError(CsbmError):
    """Malformed instance file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
