"""Exception hierarchy shared by the library and the command line."""


class BunchlabError(Exception):
    """Base class for all errors raised by bunchlab."""


class ValidationError(BunchlabError, ValueError):
    """Input violates a structural precondition (not Hermitian, not p.s.d., ...)."""


class DimensionError(ValidationError):
    """Shapes of the operands do not match."""


class DegenerateError(ValidationError):
    """Input is valid but the requested quantity is undefined for it."""


class SizeError(BunchlabError):
    """Problem size exceeds the cap of the requested algorithm."""


class NumericError(BunchlabError, ArithmeticError):
    """A numerical routine failed or produced an out-of-range result."""
