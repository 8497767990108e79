"""The area-preserving generalized baker's map on the unit square.

``B(x, y) = (f(x), g(x, y))`` with

    g(x, y) = phi(f(x)) * y                   if x <= a
    g(x, y) = y + phi(f(x)) * (1 - y)         if x >  a

so the strip left of ``a`` lands under the graph of the cut and the strip to
the right lands above it.  Vertical fibres map affinely into fibres.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array

from . import _kernels
from ._validation import ConvergenceError, DomainError, check_interval
from .one_d_map import ExpandingMap

__all__ = ["BakerMap"]


class BakerMap(TransformerMixin, BaseEstimator):
    """Generalized baker's transformation built over an expanding factor.

    Parameters
    ----------
    factor : ExpandingMap, default=ExpandingMap()
        The 1-D map ``f`` (and through it the cut).

    ``transform`` maps an ``(n_samples, 2)`` array of points one step forward.
    """

    def __init__(self, factor=None):
        self.factor = factor

    def fit(self, X=None, y=None):
        self.factor_._validate()
        return self

    def transform(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected points of shape (n, 2), got {X.shape}")
        x, y = self.forward(X[:, 0], X[:, 1])
        return np.column_stack([x, y])

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags

    @property
    def factor_(self):
        return ExpandingMap() if self.factor is None else self.factor

    @property
    def cut_(self):
        return self.factor_.cut_

    # -- dynamics ------------------------------------------------------------
    def _check_point(self, x, y):
        x = check_interval(x, "x", closed_hi=False)
        y = check_interval(y, "y")
        return np.broadcast_arrays(x, y)

    def forward(self, x, y):
        scalar = np.ndim(x) == 0 and np.ndim(y) == 0
        xa, ya = self._check_point(x, y)
        fx, gy, _ = self._step(xa.astype(float).ravel(), ya.astype(float).ravel())
        if scalar:
            return float(fx[0]), float(gy[0])
        return fx.reshape(xa.shape), gy.reshape(xa.shape)

    def _step(self, x, y, contraction=None):
        """One step on flat arrays (copies); returns ``(x', y', contraction')``."""
        fac = self.factor_
        params = fac._kernel_params()
        x = np.array(x, dtype=float, copy=True)
        y = np.array(y, dtype=float, copy=True)
        c = np.empty(0) if contraction is None else np.array(contraction, dtype=float, copy=True)
        if params is not None:
            failures = _kernels.baker_step_kernel(
                x, y, c, *params, float(fac.root_tol), *fac._uniform_tables())
            if failures:
                raise ConvergenceError(f"{failures} implicit solves failed to converge")
            return x, y, (c if contraction is not None else None)
        cut = fac.cut_
        left = x <= fac.a
        fx = fac._forward(x)
        ph = cut._phi(fx)
        contr = np.where(left, ph, cut._one_minus_phi(fx))
        gy = np.where(left, ph * y, y + ph * (1.0 - y))
        if contraction is not None:
            c = c * contr
        return fx, gy, (c if contraction is not None else None)

    def step_inplace(self, x, y, contraction=None):
        """Advance flat float64 arrays by one step of B, overwriting them.

        This is the hot loop for Monte Carlo estimators: no validation and
        no allocation on the compiled path.
        """
        fac = self.factor_
        params = fac._kernel_params()
        if params is not None:
            c = np.empty(0) if contraction is None else contraction
            failures = _kernels.baker_step_kernel(
                x, y, c, *params, float(fac.root_tol), *fac._uniform_tables())
            if failures:
                raise ConvergenceError(f"{failures} implicit solves failed to converge")
            return
        fx, gy, c = self._step(x, y, contraction)
        x[:] = fx
        y[:] = gy
        if contraction is not None:
            contraction[:] = c

    def iterate(self, x, y, n):
        """``B^n(x, y)`` by composing single steps."""
        if n < 0:
            raise ValueError("n must be non-negative")
        scalar = np.ndim(x) == 0 and np.ndim(y) == 0
        xa, ya = self._check_point(x, y)
        shape = xa.shape
        xs = np.array(xa, dtype=float).ravel()
        ys = np.array(ya, dtype=float).ravel()
        for _ in range(n):
            self.step_inplace(xs, ys)
        if scalar:
            return float(xs[0]), float(ys[0])
        return xs.reshape(shape), ys.reshape(shape)

    def orbit(self, x, y, n):
        """Rows ``(step, x, y, contraction)`` for a single starting point."""
        xa, ya = self._check_point(x, y)
        if xa.ndim:
            raise ValueError("orbit takes a single point")
        xs, ys, cs = np.array([float(xa)]), np.array([float(ya)]), np.array([1.0])
        rows = [(0, xs[0], ys[0], 1.0)]
        for k in range(1, n + 1):
            self.step_inplace(xs, ys, cs)
            rows.append((k, xs[0], ys[0], cs[0]))
        return np.array(rows)

    def jacobian(self, x, y):
        """Derivative matrix of B, shape ``(..., 2, 2)``; lower triangular, det 1."""
        xa, ya = self._check_point(x, y)
        fac = self.factor_
        cut = fac.cut_
        a = fac.a
        if np.any(xa == 0.0) or np.any(xa == a):
            raise DomainError("the Jacobian is taken at interior points off the cut line x = a")
        xa = np.asarray(xa, dtype=float)
        ya = np.asarray(ya, dtype=float)
        fx = fac._forward(xa)
        ph = cut._phi(fx)
        one_minus = cut._one_minus_phi(fx)
        dph = cut.phi_prime(fx)
        left = xa < a
        J = np.zeros(xa.shape + (2, 2))
        J[..., 0, 0] = np.where(left, 1.0 / ph, 1.0 / one_minus)
        J[..., 1, 1] = np.where(left, ph, one_minus)
        J[..., 1, 0] = np.where(left, dph * ya / ph, dph * (1.0 - ya) / one_minus)
        return J

    def fibre_contraction(self, x, n):
        """Product of the fibre factors along the first ``n`` steps from ``x``.

        Equals ``d g_n / d y``, the length of the image of the fibre over ``x``.
        """
        if n < 1:
            raise ValueError("n must be positive")
        scalar = np.ndim(x) == 0
        xa = np.array(check_interval(x, "x", closed_hi=False), dtype=float).ravel()
        ys = np.zeros_like(xa)
        cs = np.ones_like(xa)
        for _ in range(n):
            self.step_inplace(xa, ys, cs)
        return float(cs[0]) if scalar else cs.reshape(np.shape(x))
