"""Exception types shared across the library."""


class LpsError(Exception):
    """Base class for all library errors."""


class InvalidInputError(LpsError, ValueError):
    """Input violates a documented precondition (shape, finiteness, parameter range)."""


class UnsupportedExponentError(InvalidInputError):
    """The exponent p lies outside the range an operation is defined for."""


class UndefinedDerivativeError(InvalidInputError):
    """Derivative requested at a point where the map is not differentiable."""


class SingularPointError(InvalidInputError):
    """Operation undefined at this point (e.g. Hessian of a norm power at 0)."""


class InvalidIndexError(InvalidInputError):
    """Column/row index set is out of range or contains duplicates."""


class NotPositiveDefiniteError(LpsError):
    """A symmetric factorization found a non-positive pivot."""


class RankDeficientError(LpsError):
    """Matrix does not have the full (row) rank the operation requires."""


class CapacityError(LpsError):
    """Exhaustive computation would exceed the configured subset cap."""
