"""Parameter checks shared by every module."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np


class ParameterError(ValueError):
    """A precondition on an argument was violated."""


class CapabilityError(RuntimeError):
    """The request is valid but beyond what the implementation can compute."""


def check_positive(name: str, value, *, allow_zero: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ParameterError(f"{name} must be {bound}, got {value}")
    return value


def check_open_unit(name: str, value) -> float:
    value = check_positive(name, value)
    if not value < 1:
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_count(name: str, value, *, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_count_array(X) -> np.ndarray:
    """Validate a 1-D array of packet counts."""
    counts = np.asarray(X)
    if counts.ndim != 1:
        raise ParameterError(f"expected a 1-D array of counts, got shape {counts.shape}")
    if counts.size and not np.issubdtype(counts.dtype, np.integer):
        if not np.all(np.equal(np.mod(counts, 1), 0)):
            raise ParameterError("counts must be integers")
    counts = counts.astype(np.int64)
    if np.any(counts < 0):
        raise ParameterError("counts must be nonnegative")
    return counts
