"""Exception types raised across the package."""


class FixpointError(Exception):
    """Base class for all package errors."""


class UsageError(FixpointError, ValueError):
    """Malformed input: dimension mismatch, bad shape, non-finite entries."""


class NonSquare(UsageError):
    pass


class ValidationError(FixpointError, ValueError):
    """A configuration or serialized document failed validation.

    ``field`` names the offending entry when one can be identified.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NumericError(FixpointError, ArithmeticError):
    """An underlying numerical routine failed to converge."""


class MathematicalRejection(FixpointError):
    """Input is well formed but violates a mathematical hypothesis."""


class ExpansiveOperator(MathematicalRejection):
    def __init__(self, norm, tol=None):
        msg = f"operator is expansive: spectral norm {norm:.12g} > 1"
        if tol is not None:
            msg += f" + {tol:g}"
        super().__init__(msg)
        self.norm = norm


class EmptyFixedSet(MathematicalRejection):
    def __init__(self, residual):
        super().__init__(
            f"offset is not in the range of Id - R (residual {residual:.3g}); "
            "the affine map has no fixed point"
        )
        self.residual = residual


class AtFixedPoint(FixpointError):
    """Raised when the optimal relaxation is requested at a (numerical) fixed point."""


class BandViolation(FixpointError, ValueError):
    def __init__(self, index, value):
        where = "value" if index is None else f"index {index}"
        super().__init__(f"relaxation parameter {value!r} at {where} is outside ]0, 1[")
        self.index = index
        self.value = value


class MissingHistory(FixpointError):
    pass


class IdentityOperator(FixpointError, ValueError):
    pass


class YNotFixed(FixpointError, ValueError):
    pass
