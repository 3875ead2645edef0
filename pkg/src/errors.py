"""
Error Types
Exceptions raised across the non-Markovianity toolkit.
"""

from typing import Optional


class NMLabError(Exception):
    """Base class for all toolkit errors."""


class NonHermitian(NMLabError, ValueError):
    """Matrix expected to be Hermitian is not, within tolerance."""


class DimensionMismatch(NMLabError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class NonTraceless(NMLabError, ValueError):
    """Choi derivative with a trace beyond tolerance."""


class UnsortedGrid(NMLabError, ValueError):
    """Time grid is not sorted in increasing order."""


class NotMarkovian(NMLabError, ValueError):
    """Generator required to be Markovian has a negative Kossakowski eigenvalue."""


class StepTooLarge(NMLabError, RuntimeError):
    """Integration step too large for an accurate matrix exponential."""


class NotConverged(NMLabError, RuntimeError):
    """Optimizer hit its iteration cap without meeting the stopping rule."""


class ParseError(NMLabError, ValueError):
    """
    Generator specification could not be parsed.

    Attributes:
        line: Line number of the offending text (1-based), if known
        field: Dotted path of the offending field, if known
    """

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")
        self.line = line
        self.field = field


class ValidationError(NMLabError, ValueError):
    """
    Parsed specification violates a model invariant.

    Attributes:
        invariant: Short name of the violated invariant
    """

    def __init__(self, message: str, invariant: str):
        super().__init__(f"{message} [invariant: {invariant}]")
        self.invariant = invariant
