"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class InputError(ValueError):
    """Unreadable or empty input data (files, configs)."""


class ContractError(ValueError):
    """Caller broke a documented precondition between two components."""


class NumericalError(ArithmeticError):
    """An iterative routine failed to converge or produced non-finite values."""

    def __init__(self, message: str, residual: float | None = None) -> None:
        super().__init__(message)
        self.residual = residual


class EvaluationError(ArithmeticError):
    """A user function returned a non-finite value at some eigenvalue."""

    def __init__(self, message: str, value: float) -> None:
        super().__init__(message)
        self.value = value
