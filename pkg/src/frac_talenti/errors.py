"""Exception types raised by the library."""


class FracTalentiError(Exception):
    """Base class for all library errors."""


class DomainError(FracTalentiError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(FracTalentiError, RuntimeError):
    """A numerical procedure exhausted its budget before meeting its tolerance."""

    def __init__(self, message, operation=None, params=None):
        super().__init__(message)
        self.operation = operation
        self.params = dict(params or {})


class ConditionNotSatisfied(FracTalentiError, ValueError):
    """A theorem hypothesis (e.g. an admissibility condition on rho) fails."""


class PositivityError(FracTalentiError, RuntimeError):
    """A boundary trace that must be positive came out non-positive."""
