"""Cut functions for generalized baker's maps.

A cut function is a non-increasing map ``[0, 1] -> [0, 1]`` whose graph splits
the unit square.  Every cut here exposes, besides ``phi`` itself, the pieces of
calculus the dynamics need:

* ``Phi(t)``           the antiderivative ``int_0^t phi``
* ``lower_excess(t)``  ``int_0^t (1 - phi) = t - Phi(t)``
* ``upper_tail(s)``    ``int_{1-s}^1 phi = a - Phi(1 - s)``
* ``one_minus_phi(t)``

The last three are evaluated in closed form near the endpoints so that values
of size ``1e-15`` keep full relative precision; the tower construction depends
on this.

Built-in families::

    constant(c)                   phi = c          (classical baker at c = 1/2)
    linear()                      phi = 1 - t
    symmetric_power(alpha)        1 - 2**(alpha-1) t**alpha on [0, 1/2], mirrored
    make_asymmetric_power(a, a')  left exponent a, right exponent a'
    tabulated(t, values)          monotone cubic interpolation of a table
"""

from dataclasses import dataclass, field
from functools import cached_property
import warnings

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._validation import (
    DomainError,
    JunctionWarning,
    as_output,
    check_interval,
    check_positive,
)

__all__ = [
    "CutFunction",
    "ConstantCut",
    "PowerCut",
    "TabulatedCut",
    "constant",
    "linear",
    "symmetric_power",
    "make_asymmetric_power",
    "tabulated",
    "from_config",
    "eval_phi",
    "eval_Phi",
    "eval_phi_prime",
]

# absolute tolerance promised for antiderivatives that are not closed form
QUAD_TOL = 1e-13


def _pow(t, p):
    if p == 1.0:
        return t
    if p == 2.0:
        return t * t
    if p == 3.0:
        return t * t * t
    return np.power(t, p)


def _pow_diff(hi, lo, p):
    """``hi**p - lo**p`` for ``0 <= lo <= hi`` without cancellation."""
    hi = np.asarray(hi, dtype=float)
    lo = np.asarray(lo, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = (hi - lo) / hi
        out = -np.power(hi, p) * np.expm1(p * np.log1p(-rel))
    return np.where(hi > 0, out, 0.0)


class CutFunction:
    """Base class: public evaluation with domain checks, generic fallbacks.

    Subclasses implement the unchecked ``_phi``, ``_Phi``, ``_phi_prime`` and
    may override the endpoint-accurate helpers.
    """

    kind = "abstract"
    alpha = None
    alpha_prime = None
    c0 = None
    c1 = None

    # -- public, checked -------------------------------------------------
    def phi(self, t):
        t_arr = check_interval(t, "t")
        return as_output(self._phi(t_arr), t)

    def Phi(self, t):
        t_arr = check_interval(t, "t")
        return as_output(self._Phi(t_arr), t)

    def phi_prime(self, t, side="left"):
        """Derivative of the cut.

        At an interior junction where the one-sided derivatives differ, the
        ``side`` derivative is returned and a :class:`JunctionWarning` is
        issued.  Endpoints where the derivative diverges raise DomainError.
        """
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        t_arr = check_interval(t, "t")
        return as_output(self._phi_prime(t_arr, side), t)

    def one_minus_phi(self, t):
        t_arr = check_interval(t, "t")
        return as_output(self._one_minus_phi(t_arr), t)

    def lower_excess(self, t):
        t_arr = check_interval(t, "t")
        return as_output(self._lower_excess(t_arr), t)

    def upper_tail(self, s):
        s_arr = check_interval(s, "s")
        return as_output(self._upper_tail(s_arr), s)

    @cached_property
    def a(self):
        """Cut abscissa: total area under the graph."""
        return float(self._Phi(np.asarray(1.0)))

    @property
    def symmetric(self):
        return False

    @property
    def is_constant(self):
        return False

    # -- generic fallbacks ----------------------------------------------
    def _one_minus_phi(self, t):
        return 1.0 - self._phi(t)

    def _lower_excess(self, t):
        return t - self._Phi(t)

    def _upper_tail(self, s):
        return self.a - self._Phi(1.0 - s)

    def excess_between(self, lo, hi):
        """``int_lo^hi (1 - phi)`` for ``lo <= hi``."""
        return self._lower_excess(np.asarray(hi, float)) - self._lower_excess(np.asarray(lo, float))

    def tail_between(self, s_lo, s_hi):
        """``int_{1-s_hi}^{1-s_lo} phi`` given complements ``s_lo <= s_hi``."""
        return self._upper_tail(np.asarray(s_hi, float)) - self._upper_tail(np.asarray(s_lo, float))

    def to_config(self):
        raise NotImplementedError

    def __call__(self, t):
        return self.phi(t)


@dataclass(frozen=True, eq=True)
class ConstantCut(CutFunction):
    """``phi = c``; at ``c = 1/2`` this is the classical baker's map."""

    c: float = 0.5
    kind = "constant"

    def __post_init__(self):
        c = check_positive(self.c, "c")
        if not c < 1:
            raise ValueError(f"constant cut needs 0 < c < 1, got {c}")
        object.__setattr__(self, "c", c)

    @property
    def symmetric(self):
        return self.c == 0.5

    @property
    def is_constant(self):
        return True

    def _phi(self, t):
        return np.full(np.shape(t), self.c)

    def _Phi(self, t):
        return self.c * t

    def _phi_prime(self, t, side="left"):
        return np.zeros(np.shape(t))

    def _lower_excess(self, t):
        return (1.0 - self.c) * t

    def _upper_tail(self, s):
        return self.c * s

    def to_config(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True, eq=True)
class PowerCut(CutFunction):
    """Piecewise power cut, continuous at 1/2 with value 1/2.

    ``phi(t) = 1 - 2**(alpha-1) t**alpha`` on ``[0, 1/2]`` and
    ``phi(t) = 2**(alpha_prime-1) (1-t)**alpha_prime`` on ``[1/2, 1]``.
    With ``alpha == alpha_prime`` the cut is symmetric; with both equal to 1
    it is the linear cut ``1 - t``.
    """

    alpha: float = 1.0
    alpha_prime: float = 1.0
    label: str = field(default="asymmetric_power", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_positive(self.alpha, "alpha"))
        object.__setattr__(self, "alpha_prime", check_positive(self.alpha_prime, "alpha_prime"))

    @property
    def kind(self):
        return self.label

    @property
    def c0(self):
        return 2.0 ** (self.alpha - 1.0)

    @property
    def c1(self):
        return 2.0 ** (self.alpha_prime - 1.0)

    @property
    def symmetric(self):
        return self.alpha == self.alpha_prime

    @cached_property
    def a(self):
        # written so that a == 0.5 exactly when the exponents agree
        return 0.5 + (0.25 / (self.alpha_prime + 1.0) - 0.25 / (self.alpha + 1.0))

    # left piece: G(t) = c0 t**(alpha+1) / (alpha+1); right piece in s = 1 - t
    def _G_left(self, t):
        p = self.alpha + 1.0
        return self.c0 * _pow(t, p) / p

    def _U_right(self, s):
        p = self.alpha_prime + 1.0
        return self.c1 * _pow(s, p) / p

    def _phi(self, t):
        t = np.asarray(t, dtype=float)
        s = 1.0 - t
        left = t <= 0.5
        return np.where(left, 1.0 - self.c0 * _pow(np.where(left, t, 0.0), self.alpha),
                        self.c1 * _pow(np.where(left, 0.5, s), self.alpha_prime))

    def _one_minus_phi(self, t):
        t = np.asarray(t, dtype=float)
        s = 1.0 - t
        left = t <= 0.5
        return np.where(left, self.c0 * _pow(np.where(left, t, 0.0), self.alpha),
                        1.0 - self.c1 * _pow(np.where(left, 0.5, s), self.alpha_prime))

    def _Phi(self, t):
        t = np.asarray(t, dtype=float)
        left = t <= 0.5
        tl = np.where(left, t, 0.0)
        sr = np.where(left, 0.5, 1.0 - t)
        return np.where(left, tl - self._G_left(tl), self.a - self._U_right(sr))

    def _lower_excess(self, t):
        t = np.asarray(t, dtype=float)
        left = t <= 0.5
        tl = np.where(left, t, 0.0)
        sr = np.where(left, 0.5, 1.0 - t)
        return np.where(left, self._G_left(tl), (t - self.a) + self._U_right(sr))

    def _upper_tail(self, s):
        s = np.asarray(s, dtype=float)
        right = s <= 0.5
        sr = np.where(right, s, 0.0)
        tl = np.where(right, 0.5, 1.0 - s)
        return np.where(right, self._U_right(sr), (self.a - tl) + self._G_left(tl))

    def _phi_prime(self, t, side="left"):
        t = np.asarray(t, dtype=float)
        al, alp = self.alpha, self.alpha_prime
        if al < 1 and np.any(t == 0.0):
            raise DomainError(f"phi' diverges at t = 0 for alpha = {al} < 1")
        if alp < 1 and np.any(t == 1.0):
            raise DomainError(f"phi' diverges at t = 1 for alpha_prime = {alp} < 1")
        at_junction = t == 0.5
        if al != alp and np.any(at_junction):
            warnings.warn(
                f"phi' at the junction t = 1/2 is one-sided; returning the {side} derivative",
                JunctionWarning,
                stacklevel=3,
            )
        use_left = t < 0.5
        if side == "left":
            use_left = use_left | at_junction
        tl = np.where(use_left, t, 0.5)
        sr = np.where(use_left, 0.5, 1.0 - t)
        with np.errstate(divide="ignore"):
            dl = -al * self.c0 * np.power(tl, al - 1.0)
            dr = -alp * self.c1 * np.power(sr, alp - 1.0)
        return np.where(use_left, dl, dr)

    def excess_between(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        p = self.alpha + 1.0
        inside = hi <= 0.5
        accurate = self.c0 / p * _pow_diff(np.where(inside, hi, 0.0), np.where(inside, lo, 0.0), p)
        return np.where(inside, accurate, self._lower_excess(hi) - self._lower_excess(lo))

    def tail_between(self, s_lo, s_hi):
        s_lo = np.asarray(s_lo, dtype=float)
        s_hi = np.asarray(s_hi, dtype=float)
        p = self.alpha_prime + 1.0
        inside = s_hi <= 0.5
        accurate = self.c1 / p * _pow_diff(np.where(inside, s_hi, 0.0), np.where(inside, s_lo, 0.0), p)
        return np.where(inside, accurate, self._upper_tail(s_hi) - self._upper_tail(s_lo))

    def to_config(self):
        cfg = {"kind": self.kind}
        if self.kind == "symmetric_power":
            cfg["alpha"] = self.alpha
        elif self.kind == "asymmetric_power":
            cfg["alpha"] = self.alpha
            cfg["alpha_prime"] = self.alpha_prime
        return cfg


class TabulatedCut(CutFunction):
    """User-supplied decreasing table, interpolated by monotone cubic (PCHIP).

    The antiderivative is the exact integral of the interpolant, so it is
    accurate to round-off, well inside ``QUAD_TOL``.
    """

    kind = "custom"

    def __init__(self, t, values, alpha=None, alpha_prime=None):
        t = np.asarray(t, dtype=float)
        values = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != values.shape or t.size < 2:
            raise ValueError("table needs two matching 1-D arrays of length >= 2")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise ValueError("table abscissae must increase strictly from 0 to 1")
        if np.any(np.diff(values) > 0):
            raise ValueError("tabulated cut must be non-increasing")
        if np.any(values < 0) or np.any(values > 1):
            raise ValueError("tabulated cut values must lie in [0, 1]")
        self.t = t
        self.values = values
        self.alpha = alpha
        self.alpha_prime = alpha_prime
        self._interp = PchipInterpolator(t, values)
        self._anti = self._interp.antiderivative()
        self._deriv = self._interp.derivative()

    def _phi(self, t):
        return np.clip(self._interp(t), 0.0, 1.0)

    def _Phi(self, t):
        return self._anti(t)

    def _phi_prime(self, t, side="left"):
        return self._deriv(t)

    @cached_property
    def symmetric(self):
        grid = np.linspace(0.0, 1.0, 1001)
        return bool(np.max(np.abs(1.0 - self._phi(grid) - self._phi(1.0 - grid))) <= 1e-12)

    def __eq__(self, other):
        return (isinstance(other, TabulatedCut) and np.array_equal(self.t, other.t)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.t.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return f"TabulatedCut(n_nodes={self.t.size})"

    def to_config(self):
        return {"kind": "custom", "t": self.t.tolist(), "values": self.values.tolist()}


# -- factories ------------------------------------------------------------

def constant(c=0.5):
    return ConstantCut(c)


def linear():
    return PowerCut(1.0, 1.0, label="linear")


def symmetric_power(alpha):
    alpha = check_positive(alpha, "alpha")
    return PowerCut(alpha, alpha, label="symmetric_power")


def make_asymmetric_power(alpha, alpha_prime):
    """Piecewise power cut with independent endpoint exponents.

    Continuous at 1/2 (value 1/2) and decreasing, with the endpoint expansions
    ``1 - phi(t) ~ 2**(alpha-1) t**alpha`` and
    ``phi(1-t) ~ 2**(alpha_prime-1) t**alpha_prime`` holding exactly.
    """
    return PowerCut(alpha, alpha_prime, label="asymmetric_power")


def tabulated(t, values, alpha=None, alpha_prime=None):
    return TabulatedCut(t, values, alpha=alpha, alpha_prime=alpha_prime)


def from_config(cfg):
    """Build a cut from a config mapping (values may be strings)."""
    kind = str(cfg.get("kind", "linear")).strip().lower().replace("-", "_")

    def num(key, default=None):
        if key not in cfg or cfg[key] in (None, ""):
            if default is None:
                raise ValueError(f"cut kind {kind!r} requires field {key!r}")
            return default
        try:
            return float(cfg[key])
        except (TypeError, ValueError):
            raise ValueError(f"field {key!r} must be a number, got {cfg[key]!r}") from None

    if kind == "constant":
        return constant(num("c", 0.5))
    if kind == "linear":
        return linear()
    if kind == "symmetric_power":
        return symmetric_power(num("alpha"))
    if kind == "asymmetric_power":
        return make_asymmetric_power(num("alpha"), num("alpha_prime"))
    if kind == "custom":
        if "t" in cfg and "values" in cfg:
            return tabulated(cfg["t"], cfg["values"])
        if "table" in cfg:
            data = np.loadtxt(cfg["table"], delimiter=",", ndmin=2)
            return tabulated(data[:, 0], data[:, 1])
        raise ValueError("cut kind 'custom' requires a 'table' CSV path")
    raise ValueError(f"unknown cut kind {cfg.get('kind')!r}")


# functional spellings
def eval_phi(cut, t):
    return cut.phi(t)


def eval_Phi(cut, t):
    return cut.Phi(t)


def eval_phi_prime(cut, t, side="left"):
    return cut.phi_prime(t, side=side)
