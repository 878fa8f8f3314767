"""Exception hierarchy shared by the numerical modules and the CLI."""


class PqLabError(Exception):
    """Base class for every error raised by pqlab."""


class ValidationError(PqLabError, ValueError):
    """An input violates a documented invariant (bad parameters, config)."""


class NumericalError(PqLabError, ArithmeticError):
    """A series, integral or sum could not be evaluated to tolerance."""

    def __init__(self, message, k=None):
        if k is not None:
            message = f"{message} (k={k})"
        super().__init__(message)
        self.k = k


class DivergenceDetected(NumericalError):
    pass


class TruncationBudgetExceeded(NumericalError):
    pass


class NodeBudgetExceeded(NumericalError):
    pass


class DivergentTail(NumericalError):
    pass


class TailNotConverged(NumericalError):
    pass


class DomainError(NumericalError):
    """A function produced a non-finite value at the reported argument."""

    def __init__(self, message, t=None, k=None):
        if t is not None:
            message = f"{message} at t={t!r}"
        super().__init__(message, k=k)
        self.t = t


class SchemeInvalid(ValidationError):
    pass
