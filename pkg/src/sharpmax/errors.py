"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class DivergenceError(ArithmeticError):
    """A series or moment requested in closed form does not converge."""
