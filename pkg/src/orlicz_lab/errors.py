"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidSpecError(ValueError):
    """An N-function or problem specification is degenerate."""


class UnsupportedSpecError(ValueError):
    """A structural condition needed by an operation does not hold."""


class RangeError(ValueError):
    """An inversion target falls outside the tabulated range."""


class ShapeError(ValueError):
    """Grid functions live on incompatible domains."""


class PreconditionError(ValueError):
    """A documented precondition failed; the message names it."""
