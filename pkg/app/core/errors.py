"""Exception hierarchy for the bee-identification toolkit"""
from typing import Optional


class BeeIdError(Exception):
    """Base class for every error raised by the toolkit"""


class DomainError(BeeIdError, ValueError):
    """Argument lies outside the mathematical domain of a calculator"""


class RateRangeError(DomainError):
    """Rate outside the interval where a closed form is established"""


class ShapeMismatchError(BeeIdError, ValueError):
    """Vectors, matrices or maps whose shapes do not line up"""


class CodebookFormatError(BeeIdError, ValueError):
    """Malformed codebook or channel-output text file"""


class ResourceLimitError(BeeIdError):
    """Request exceeds a configured memory or enumeration cap"""


class InsufficientDataError(BeeIdError):
    """Too few cells with observed errors to fit an exponent"""


class GenerationBudgetError(BeeIdError):
    """
    Typical-random-code sampling ran out of attempts for one row.

    Signals that (n, m, epsilon) is infeasible, or nearly so, at this blocklength.
    """

    def __init__(
        self,
        n: int,
        m: int,
        epsilon: float,
        row_index: int,
        attempts: int,
        message: Optional[str] = None
    ):
        self.n = n
        self.m = m
        self.epsilon = epsilon
        self.row_index = row_index
        self.attempts = attempts
        super().__init__(
            message
            or f"TRC generation failed: row {row_index} rejected {attempts} times "
               f"(n={n}, m={m}, epsilon={epsilon:g})"
        )
