"""Exception types shared across the package."""


class PolymotError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PolymotError, ValueError):
    """An argument violates a documented precondition or invariant."""


class NumericalDegeneracyError(PolymotError, ArithmeticError):
    """A covariance lost positive-definiteness or a factorization failed."""


class ParseError(PolymotError, ValueError):
    """A file could not be parsed; message carries the offending line number."""
