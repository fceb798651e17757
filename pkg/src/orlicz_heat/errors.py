"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(ArithmeticError):
    """A numerical procedure failed (no bracket, no convergence, NaN)."""


class DivergenceError(NumericError):
    """An improper integral or series was detected to diverge."""


class NoBudgetError(NumericError):
    """No admissible scale satisfies a global smallness condition."""
