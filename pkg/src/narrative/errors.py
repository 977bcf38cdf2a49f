"""Exception hierarchy. Each class carries the CLI exit status it maps to."""


class NarrativeError(Exception):
    exit_code = 1


class ParseError(NarrativeError):
    exit_code = 2


class ValidationError(NarrativeError, ValueError):
    exit_code = 3


class DomainError(ValidationError):
    """Input outside the domain of a mean or of the system interval."""


class GraphError(ValidationError):
    """A structural precondition on a digraph is not met."""


class OracleLimitError(ValidationError):
    """Instance too large for a brute-force oracle."""


class RefusalError(NarrativeError):
    """A structural hypothesis required by the operation does not hold."""

    exit_code = 4


class NumericError(NarrativeError, ArithmeticError):
    exit_code = 5


class BudgetError(NarrativeError):
    """Iteration budget exhausted without a verdict."""

    exit_code = 6


class InternalError(NarrativeError):
    exit_code = 70
