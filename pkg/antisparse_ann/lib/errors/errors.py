"""Module providing the exception hierarchy shared by every antisparse_ann component"""
from __future__ import annotations

from typing import Any, Optional, Sequence


class AntisparseError(Exception):
    """Base class for all library errors"""

    if not hasattr(BaseException, "add_note"):  # Python < 3.11 compatibility
        def add_note(self, note: str) -> None:
            if not hasattr(self, "__notes__"):
                self.__notes__ = []
            self.__notes__.append(note)


class DimensionError(AntisparseError, ValueError):
    """Raised on inconsistent shapes, invalid sizes or out-of-range counts"""


class ZeroVectorError(AntisparseError, ValueError):
    """Raised when a zero vector is handed to an encoder"""


class InsufficientDataError(AntisparseError, ValueError):
    """Raised when PCA training data cannot support the requested rank"""


class DegenerateInstanceError(AntisparseError, RuntimeError):
    """Raised when the solver meets a partition it cannot move past"""

    def __init__(self, message: str, saturated: Sequence[int], free: Sequence[int]):
        super().__init__(f"{message} (saturated={list(saturated)}, free={list(free)})")
        self.saturated = tuple(saturated)
        self.free = tuple(free)


class NonConvergenceError(AntisparseError, RuntimeError):
    """Raised when the path exceeds its partition-change budget"""

    def __init__(self, message: str, trace: Optional[Sequence[Any]] = None):
        super().__init__(message)
        self.trace = list(trace or [])


class VecsFormatError(AntisparseError, ValueError):
    """Base class for fvecs/bvecs/ivecs parse errors; carries the byte offset"""

    def __init__(self, message: str, path: str, offset: int):
        super().__init__(f"{path}: {message} at byte offset {offset}")
        self.path = path
        self.offset = offset


class TruncatedRecordError(VecsFormatError):
    """A record is cut short by the end of the file"""


class InconsistentDimensionError(VecsFormatError):
    """A record declares a dimension different from the first record"""


class NonPositiveDimensionError(VecsFormatError):
    """A record declares a dimension <= 0"""


class ContainerFormatError(AntisparseError, ValueError):
    """Raised when an ASPM/ASPC/ASBC container has a bad header or length"""


class MatrixMismatchError(AntisparseError, ValueError):
    """Raised when a projection matrix does not match the one an index was built with"""
