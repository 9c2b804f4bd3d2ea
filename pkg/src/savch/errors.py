"""Exception hierarchy shared by the solver modules and the CLI."""


class SavError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(SavError, ValueError):
    """A parameter violates its documented precondition."""


class NumericalDomainError(SavError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class SolverError(SavError, RuntimeError):
    """A linear solve or factorization failed."""


class DegenerateStepError(SolverError):
    """The scalar update for r has a vanishing denominator."""
