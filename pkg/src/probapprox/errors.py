"""Exception hierarchy shared across the package."""


class ProbApproxError(Exception):
    """Base class for all package errors."""


class DomainError(ProbApproxError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ExprSyntaxError(ProbApproxError, ValueError):
    """Malformed expression text.

    ``offset`` is the byte offset of the offending token and ``expected``
    the set of tokens that would have been accepted there.
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvalDomainError(DomainError):
    """Expression evaluation left the reals (log of nonpositive, 1/0, ...)."""

    def __init__(self, message, subexpr, x=None):
        self.subexpr = subexpr
        self.x = x
        where = f" at x={x!r}" if x is not None else ""
        super().__init__(f"{message} in '{subexpr}'{where}")


class OperatorError(ProbApproxError):
    """Failure while evaluating an approximation operator."""


class InconsistentProviderError(OperatorError):
    pass


class PlanningError(ProbApproxError):
    """A truncation plan could not be computed."""


class ConfigError(ProbApproxError, ValueError):
    """Invalid combination of options."""


class BoundMisuseError(ProbApproxError, ValueError):
    pass


class RateError(ProbApproxError):
    pass
