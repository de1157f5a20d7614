"""Exception types shared across the package."""


class RankmixError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(RankmixError, ValueError):
    """An argument violates a documented precondition (shape, range, membership)."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally valid but produces an undefined result (e.g. zero vector)."""


class InvalidStateError(RankmixError, RuntimeError):
    """An operation was called in a state where it cannot proceed."""


class QuerySpaceExhaustedError(InvalidStateError):
    """No unused queries remain for without-replacement selection."""
