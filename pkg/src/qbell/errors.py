"""Exception types raised across the package."""


class QBellError(Exception):
    """Base class for all package errors."""


class ContractError(QBellError, ValueError):
    """An input violates a documented precondition (Hermiticity, trace, ...)."""


class SizeError(QBellError, ValueError):
    """A requested dimension is outside the supported range."""


class FitError(QBellError, RuntimeError):
    """Curve fitting could not be carried out on the given data."""


class ZeroProbabilityError(QBellError, ArithmeticError):
    """A conditional operation has zero probability of success."""


class UndefinedConstraintError(QBellError, ArithmeticError):
    """A subspace Bell parameter is undefined because the projected weight vanishes."""


class InfeasibleError(QBellError, RuntimeError):
    """No candidate satisfied every constraint band."""

    def __init__(self, message, worst_residual=None, residuals=None):
        super().__init__(message)
        self.worst_residual = worst_residual
        self.residuals = residuals or {}
