"""Input validation helpers and the package exception types."""

import numbers

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class PreconditionError(ValueError):
    """The object is valid but unsuitable for the requested operation."""


class ConvergenceError(RuntimeError):
    pass


class NoiseFloorWarning(UserWarning):
    """An estimate has sunk below its noise or discretization floor."""


class TruncationWarning(UserWarning):
    pass


class JunctionWarning(UserWarning):
    """A derivative was requested exactly at a junction of a piecewise formula."""


def check_positive(value, name, allow_inf=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not value > 0 or (np.isinf(value) and not allow_inf) or np.isnan(value):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_interval(x, name="x", lo=0.0, hi=1.0, closed_hi=True, closed_lo=True):
    """Return ``x`` as a float array after checking it lies in the interval.

    Raises DomainError on the first offending value.  NaN is always rejected.
    """
    arr = np.asarray(x, dtype=float)
    below = arr < lo if closed_lo else arr <= lo
    above = arr > hi if closed_hi else arr >= hi
    bad = below | above | np.isnan(arr)
    if np.any(bad):
        first = arr[bad].flat[0] if arr.ndim else float(arr)
        left = "[" if closed_lo else "("
        right = "]" if closed_hi else ")"
        raise DomainError(f"{name}={first!r} outside {left}{lo}, {hi}{right}")
    return arr


def as_output(arr, like):
    """Return a Python float when the caller passed a scalar."""
    if np.ndim(like) == 0:
        return float(arr)
    return arr
