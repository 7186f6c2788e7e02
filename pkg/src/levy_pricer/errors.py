"""Exception types raised by the pricing engine."""


class PricingError(Exception):
    """Base class for engine errors."""


class DomainError(PricingError, ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(PricingError, ArithmeticError):
    """A series or quadrature failed to reach its accuracy target."""


class BranchError(PricingError, ValueError):
    """A kernel was called on the wrong side of its branch condition."""


class ValidationError(PricingError, ValueError):
    """A model specification failed validation."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnsupportedDependenceError(PricingError, ValueError):
    """The dependence structure has no closed form."""


class CombinatorialBlowupError(PricingError, MemoryError):
    """A discrete convolution support grew past its cap."""


class BudgetExceededError(PricingError, RuntimeError):
    """Truncation orders needed exceed the allowed budget."""
