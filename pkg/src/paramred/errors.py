"""Exception types shared across the package."""


class ParamredError(Exception):
    """Base class for all package errors."""


class DivisionByZero(ParamredError):
    pass


class ZeroDivisor(ParamredError):
    """Inversion met a zero divisor in a quotient ring.

    The offending factor of the defining polynomial is attached so the caller
    can restart the computation in the quotient by each factor.
    """

    def __init__(self, factor, message="zero divisor encountered"):
        super().__init__(message)
        self.factor = factor


class NotSquarefree(ParamredError):
    """Attempt to adjoin a root of a non-squarefree polynomial."""

    def __init__(self, gcd, message="polynomial is not squarefree"):
        super().__init__(message)
        self.gcd = gcd


class InsufficientOrder(ParamredError):
    """A truncated series does not carry enough terms to decide the result."""


class NotInvertible(ParamredError):
    pass


class NotSingular(ParamredError):
    """Raised when a left null vector is requested from a nonsingular matrix."""


class SpectraOverlap(ParamredError):
    """Sylvester equation with overlapping spectra has no unique solution."""


class AllNilpotent(ParamredError):
    """Leading matrix has no nonzero eigenvalue."""


class PreconditionError(ParamredError):
    """An operation was called outside its contract."""


class Stalled(ParamredError):
    """Reduction reached the h = 1 dead end; the exponential order is attached."""

    def __init__(self, message="reduction stalled", omega=None):
        super().__init__(message)
        self.omega = omega


class ParseError(ParamredError):
    def __init__(self, message, line=None, col=None):
        super().__init__(message)
        self.line = line
        self.col = col


class DimensionMismatch(ParamredError):
    pass
