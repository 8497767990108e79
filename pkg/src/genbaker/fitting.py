"""Decay series and log-log power-law fits."""

from dataclasses import dataclass, field
import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

__all__ = ["DecaySeries", "PowerLawFit", "fit_power_law", "InsufficientPointsError"]

MIN_POINTS = 8
POOR_FIT_RMS = 0.2


class InsufficientPointsError(ValueError):
    pass


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Least-squares line through ``(log n, log value)``.

    Parameters
    ----------
    n_lo, n_hi : float or None
        Inclusive fit window; ``None`` leaves that side open.

    Attributes
    ----------
    exponent_ : float
        Fitted slope, i.e. ``value ~ exp(intercept_) * n**exponent_``.
    intercept_ : float
    residual_rms_ : float
    window_ : tuple of int
        Smallest and largest ``n`` actually used.
    n_points_ : int
    """

    def __init__(self, n_lo=None, n_hi=None):
        self.n_lo = n_lo
        self.n_hi = n_hi

    def fit(self, n, values):
        n = np.asarray(n, dtype=float).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if n.shape != values.shape:
            raise ValueError("n and values must have the same length")
        keep = np.isfinite(values) & (values > 0) & (n > 0)
        if self.n_lo is not None:
            keep &= n >= self.n_lo
        if self.n_hi is not None:
            keep &= n <= self.n_hi
        if keep.sum() < MIN_POINTS:
            raise InsufficientPointsError(
                f"need at least {MIN_POINTS} positive points in [{self.n_lo}, {self.n_hi}], "
                f"have {int(keep.sum())}")
        ln, lv = np.log(n[keep]), np.log(values[keep])
        slope, intercept = np.polyfit(ln, lv, 1)
        resid = lv - (slope * ln + intercept)
        self.exponent_ = float(slope)
        self.intercept_ = float(intercept)
        self.residual_rms_ = float(np.sqrt(np.mean(resid ** 2)))
        self.window_ = (int(n[keep].min()), int(n[keep].max()))
        self.n_points_ = int(keep.sum())
        if self.residual_rms_ > POOR_FIT_RMS:
            warnings.warn(
                f"log-log residual RMS {self.residual_rms_:.3f} > {POOR_FIT_RMS}: "
                "series is not in a clean power-law regime", RuntimeWarning, stacklevel=2)
        return self

    def predict(self, n):
        check_is_fitted(self, "exponent_")
        return np.exp(self.intercept_) * np.asarray(n, dtype=float) ** self.exponent_

    def score(self, n, values, sample_weight=None):
        """R^2 in log-log coordinates."""
        check_is_fitted(self, "exponent_")
        lv = np.log(np.asarray(values, dtype=float))
        pred = np.log(self.predict(n))
        ss_res = np.sum((lv - pred) ** 2)
        ss_tot = np.sum((lv - lv.mean()) ** 2)
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    def summary(self):
        check_is_fitted(self, "exponent_")
        return {
            "exponent": self.exponent_,
            "intercept": self.intercept_,
            "residual_rms": self.residual_rms_,
            "window": list(self.window_),
            "n_points": self.n_points_,
        }


@dataclass
class DecaySeries:
    """Values indexed by iteration count, optionally with standard errors."""

    n: np.ndarray
    values: np.ndarray
    stderr: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
            if self.stderr.shape != self.values.shape:
                raise ValueError("stderr must match values")
        if self.n.shape != self.values.shape:
            raise ValueError("n and values must have the same shape")
        if self.n.size > 1 and np.any(np.diff(self.n) <= 0):
            raise ValueError("n must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("decay values must be finite")

    def __len__(self):
        return self.n.size

    def at(self, n):
        idx = np.searchsorted(self.n, n)
        if idx >= self.n.size or self.n[idx] != n:
            raise KeyError(n)
        return self.values[idx]

    def fit(self, n_lo=None, n_hi=None):
        return fit_power_law(self, n_lo, n_hi)

    def noise_window_end(self, ratio=0.5):
        """Last ``n`` before the standard error first exceeds ``ratio`` times the value."""
        if self.stderr is None:
            return int(self.n[-1])
        bad = (self.stderr > ratio * np.abs(self.values)) & (self.n > 0)
        if not np.any(bad):
            return int(self.n[-1])
        first = int(np.argmax(bad))
        return int(self.n[max(first - 1, 0)])

    def to_csv(self, path_or_buf, value_name="value"):
        header = ["n", value_name] + (["stderr"] if self.stderr is not None else [])
        cols = [self.n, self.values] + ([self.stderr] if self.stderr is not None else [])
        lines = [",".join(header)]
        for row in zip(*cols):
            lines.append(",".join([str(int(row[0]))] + [repr(float(v)) for v in row[1:]]))
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


def fit_power_law(series, n_lo=None, n_hi=None):
    """Fit ``value ~ C n**exponent`` to a :class:`DecaySeries` over ``[n_lo, n_hi]``."""
    return PowerLawFit(n_lo=n_lo, n_hi=n_hi).fit(series.n, series.values)
