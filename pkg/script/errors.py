"""Exception types shared by the exact LP modules."""

from typing import Optional


class ExactLPError(Exception):
    """Base class for all errors raised by the solver."""


class RationalParseError(ExactLPError, ValueError):
    def __init__(self, token: str, reason: str = "malformed numeral"):
        self.token = token
        super().__init__(f"{reason}: {token!r}")


class RationalDomainError(ExactLPError, ZeroDivisionError):
    pass


class DimensionError(ExactLPError, ValueError):
    pass


class FormatError(ExactLPError, ValueError):
    pass


class MPSParseError(FormatError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SingularBasisError(ExactLPError, ArithmeticError):
    """Raised by the rational LU when a basis matrix is exactly singular."""


class NumericalFailure(ExactLPError, ArithmeticError):
    """Raised by the floating-point kernel when it cannot continue reliably."""


class PrecisionLimitReached(ExactLPError):
    def __init__(self, bits: int, limit: int):
        self.bits = bits
        self.limit = limit
        super().__init__(f"next precision after {bits} bits exceeds the limit of {limit} bits")
