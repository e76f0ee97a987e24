"""Exception types raised by the package."""


class DimensionError(ValueError):
    """Operands have incompatible lengths or shapes."""


class ConfigurationError(ValueError):
    """A scheme, problem or experiment is set up inconsistently."""


class DomainError(ValueError):
    """A scalar parameter lies outside its admissible range."""


class NumericalBreakdownError(ArithmeticError):
    """Non-finite values appeared during an iterative solve."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite values at CG iteration {iteration}")


class PgmParseError(ValueError):
    """Malformed PGM input; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class DegenerateSetWarning(UserWarning):
    """The reconstruction set collapsed to a point but noise is nonzero."""
