"""Exception and warning types shared by the caplaw modules.

Every error carries the exit code the command-line driver reports for it.
"""


class CaplawError(Exception):
    exit_code = 1


class DomainError(CaplawError, ValueError):
    """An argument lies outside the domain of the requested operation."""
    exit_code = 2


class BracketError(CaplawError):
    """A search bracket does not contain an admissible point."""
    exit_code = 3


class ResourceLimitError(CaplawError):
    """A simulation would exceed the configured draw cap."""
    exit_code = 4


class InvariantViolation(CaplawError):
    """A verified property did not hold."""
    exit_code = 5


class EstimationError(InvariantViolation):
    """A Monte Carlo estimate could not be formed (non-finite samples)."""


class ConjugateTruncationWarning(UserWarning):
    """The conjugate supremum was attained at the edge of the search domain."""


class DegenerateInfimumWarning(UserWarning):
    """The infimum of admissible parameters collapsed to the bisection floor."""
