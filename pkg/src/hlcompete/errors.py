class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SpecificationError(ValueError):
    """A size profile or SDE description is internally inconsistent."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PreconditionError(RuntimeError):
    """An operation was called in a state it does not support."""
