"""Exception hierarchy shared across the toolkit."""


class StochsymError(Exception):
    """Base class for all toolkit errors."""

    kind = "error"


class ParseError(StochsymError):
    """Malformed expression text. ``position`` is a 1-based character offset."""

    kind = "parse"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class EvalDomainError(StochsymError):
    """Evaluation hit a singular point (division by zero, log of a
    non-positive number, overflow, ...)."""

    kind = "domain"


class UnboundVariableError(StochsymError):
    """A free variable of the expression was not bound."""

    kind = "domain"


class IndeterminateError(StochsymError):
    """An identity test could not be decided (e.g. every sample point of the
    probing grid was singular)."""

    kind = "indeterminate"


class ValidationError(StochsymError):
    """Input rejected by a constructor or operation precondition."""

    kind = "validation"


class NotSupportedError(StochsymError):
    """The request is outside the implemented scope."""

    kind = "unsupported"


class InstabilityError(StochsymError):
    """A numerical solve became unstable (non-finite values, negative mass)."""

    kind = "instability"


class PathDomainError(StochsymError):
    """A pathwise map left its domain of definition (e.g. the inverse of an
    exponential Kozlov transform applied on the wrong branch)."""

    kind = "domain"
