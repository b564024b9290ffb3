"""Exception hierarchy.  Each pipeline abort maps onto a CLI exit code."""


class HoloconvexError(Exception):
    exit_code = 1


class ValidationError(HoloconvexError, ValueError):
    """Malformed input: problem file fields, series records, reality violations."""

    exit_code = 2


class NotAUnitError(HoloconvexError, ArithmeticError):
    exit_code = 4


class CompositionError(HoloconvexError, ValueError):
    exit_code = 4


class InvalidDefiningFunction(HoloconvexError, ValueError):
    """Holomorphic gradient of rho vanishes (or p is off the hypersurface)."""

    exit_code = 2


class UnsupportedRegime(HoloconvexError):
    exit_code = 3


class NotStrictlyPseudoconvex(UnsupportedRegime):
    pass


class NotSimplyCharacteristic(UnsupportedRegime):
    pass


class NotCharacteristic(HoloconvexError, ValueError):
    """A characteristic-only operation was called at a non-characteristic point."""

    exit_code = 2


class ImplicitSolveError(HoloconvexError, ArithmeticError):
    exit_code = 4


class DivisibilityError(HoloconvexError, ArithmeticError):
    """The hypersurface is not everywhere characteristic to working precision."""

    exit_code = 4


class ResidualFailure(HoloconvexError):
    exit_code = 4
