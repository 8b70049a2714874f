"""Working/lower precision pair and conversions between them.

Working precision is IEEE binary64, lower precision is IEEE binary32.
Complex data maps to complex128/complex64 respectively.
"""
from __future__ import annotations

import enum

import numpy as np

from .errors import PrecisionMismatch, PrecisionOverflow


class Precision(enum.Enum):
    WORKING = "working"
    LOWER = "lower"

    @property
    def unit_roundoff(self) -> float:
        return U_WORKING if self is Precision.WORKING else U_LOWER

    @property
    def real_dtype(self) -> np.dtype:
        return np.dtype(np.float64) if self is Precision.WORKING else np.dtype(np.float32)

    @property
    def complex_dtype(self) -> np.dtype:
        return np.dtype(np.complex128) if self is Precision.WORKING else np.dtype(np.complex64)

    def dtype(self, is_complex: bool) -> np.dtype:
        return self.complex_dtype if is_complex else self.real_dtype

    @classmethod
    def of(cls, obj) -> "Precision":
        """Precision tag of an array, dtype, or object with a ``dtype``."""
        dt = np.dtype(getattr(obj, "dtype", obj))
        if dt in (np.float64, np.complex128):
            return cls.WORKING
        if dt in (np.float32, np.complex64):
            return cls.LOWER
        raise PrecisionMismatch(f"unsupported dtype {dt}")


U_WORKING = 2.0 ** -53
U_LOWER = 2.0 ** -24
WORKING = Precision.WORKING
LOWER = Precision.LOWER


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("entries must be finite")


def to_lower(M):
    """Round a working-precision array to binary32 (round to nearest even).

    Objects exposing ``to_lower`` (sparse matrices) delegate to it.
    Raises :class:`PrecisionOverflow` when an entry exceeds the binary32 range.
    """
    if hasattr(M, "to_lower"):
        return M.to_lower()
    M = np.asarray(M)
    _check_finite(M)
    target = LOWER.dtype(np.iscomplexobj(M))
    with np.errstate(over="ignore"):
        out = M.astype(target)
    if not np.all(np.isfinite(out)):
        raise PrecisionOverflow("entry magnitude exceeds the binary32 range")
    return out


def to_working(M):
    """Exact embedding of a binary32 array into binary64."""
    if hasattr(M, "to_working"):
        return M.to_working()
    M = np.asarray(M)
    return M.astype(WORKING.dtype(np.iscomplexobj(M)))


def to_precision(M, precision: Precision):
    return to_lower(M) if precision is LOWER else to_working(M)
