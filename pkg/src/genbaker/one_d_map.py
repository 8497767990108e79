"""The expanding interval factor ``f`` of a generalized baker's map.

``f`` is defined implicitly by the cut's antiderivative ``Phi``:

    left branch  (x < a):  Phi(f(x)) = x
    right branch (x > a):  f(x) - Phi(f(x)) = x - a

and ``f(a) = 0`` (circle convention).  The branch inverses are explicit,
``Phi(u)`` and ``u + a - Phi(u)``, which is what makes exact transfer-operator
and tower constructions possible.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import ConvergenceError, DomainError, as_output, check_interval, check_positive
from . import _kernels
from .cut_functions import ConstantCut, CutFunction, PowerCut, linear

__all__ = ["ExpandingMap", "solve_increasing"]

_TOP = 1.0 - 2.0 ** -52


def solve_increasing(F, dF, lo, hi, guess, tol, maxiter=200):
    """Vectorized root of increasing residuals ``F(w) = 0`` on brackets ``[lo, hi]``.

    Newton steps are taken while they stay strictly inside the current
    bracket, otherwise the bracket is bisected.  Each Newton step is nudged
    ``tol/4`` past its estimate so that the iterate lands on the far side of
    the root and the bracket collapses instead of being approached from one
    side only.  Terminates elementwise once ``hi - lo <= tol`` and returns the
    bracket midpoints.

    ``F`` and ``dF`` are called with ``(w, idx)`` where ``idx`` indexes the
    still-active elements, so callers can slice per-element data.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    w = np.clip(np.asarray(guess, dtype=float), lo, hi)
    out = np.empty_like(w)
    idx = np.arange(w.size)
    lo, hi, w = lo.ravel(), hi.ravel(), w.ravel()
    out = out.ravel()
    for it in range(maxiter):
        r = F(w, idx)
        below = r < 0
        above = r > 0
        exact = ~(below | above)
        lo = np.where(below | exact, w, lo)
        hi = np.where(above | exact, w, hi)
        done = (hi - lo) <= tol
        if np.any(done):
            out[idx[done]] = 0.5 * (lo[done] + hi[done])
            keep = ~done
            idx, lo, hi, w, r = idx[keep], lo[keep], hi[keep], w[keep], r[keep]
            if idx.size == 0:
                return out
        d = dF(w, idx)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = r / d
            cand = w - step - np.sign(step) * (0.25 * tol)
        newton_ok = (cand > lo) & (cand < hi) & np.isfinite(cand)
        if it >= 8:
            # stalled Newton sequences (flat residuals) fall back to bisection every other step
            newton_ok &= (it % 2 == 0)
        w = np.where(newton_ok, cand, 0.5 * (lo + hi))
    raise ConvergenceError(f"{idx.size} roots did not converge in {maxiter} iterations")


class ExpandingMap(TransformerMixin, BaseEstimator):
    """Two-branch expanding circle map induced by a cut function.

    Parameters
    ----------
    cut : CutFunction, default=linear()
        The cut whose antiderivative defines the map.
    root_tol : float, default=1e-12
        Absolute bracket width at which the implicit solves terminate.

    The map is stateless: ``fit`` only validates parameters, and ``transform``
    applies ``f`` elementwise, so it composes in a pipeline.
    """

    def __init__(self, cut=None, root_tol=1e-12):
        self.cut = cut
        self.root_tol = root_tol

    # -- estimator protocol ----------------------------------------------
    def fit(self, X=None, y=None):
        self._validate()
        return self

    def transform(self, X):
        return self.forward(X)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags

    # -- helpers ---------------------------------------------------------
    def _validate(self):
        if self.cut is not None and not isinstance(self.cut, CutFunction):
            raise TypeError(f"cut must be a CutFunction, got {type(self.cut).__name__}")
        check_positive(self.root_tol, "root_tol")

    @property
    def cut_(self):
        return linear() if self.cut is None else self.cut

    @property
    def a(self):
        return self.cut_.a

    def _tables(self):
        cut = self.cut_
        cached = self.__dict__.get("_table_cache")
        if cached is not None and cached[0] is cut:
            return cached[1]
        geo = np.geomspace(1e-12, 0.25, 600)
        w = np.unique(np.concatenate([[0.0, 1.0], np.linspace(0, 1, 4097), geo, 1.0 - geo]))
        phi_tab = cut._Phi(w)
        excess_tab = cut._lower_excess(w)
        tables = (w, np.maximum.accumulate(phi_tab), np.maximum.accumulate(excess_tab))
        self.__dict__["_table_cache"] = (cut, tables)
        return tables

    def _uniform_tables(self, size=16385):
        """Branch roots at uniformly spaced targets, for O(1) initial guesses."""
        cut = self.cut_
        cached = self.__dict__.get("_uniform_cache")
        if cached is not None and cached[0] is cut:
            return cached[1]
        a = cut.a
        left = self._forward_numpy(np.linspace(0.0, a, size)[:-1])
        left = np.append(left, 1.0)
        right = self._forward_numpy(a + np.linspace(0.0, 1.0 - a, size)[1:-1])
        right = np.concatenate([[0.0], right, [1.0]])
        tables = (np.ascontiguousarray(left), np.ascontiguousarray(right))
        self.__dict__["_uniform_cache"] = (cut, tables)
        return tables

    # -- the map -----------------------------------------------------------
    def forward(self, x):
        """Evaluate ``f`` at points of ``[0, 1)``."""
        self._validate()
        x_arr = check_interval(x, "x", closed_hi=False)
        return as_output(self._forward(x_arr), x)

    def _kernel_params(self):
        """Float encoding of closed-form cuts for the compiled kernels, else None."""
        cut = self.cut_
        if isinstance(cut, PowerCut):
            return (cut.a, cut.c0, cut.alpha, cut.c1, cut.alpha_prime)
        if isinstance(cut, ConstantCut):
            return (cut.a, cut.c, 0.0, 0.0, 0.0)
        return None

    def _forward(self, x, compiled=True):
        params = self._kernel_params() if compiled else None
        if params is not None:
            x = np.asarray(x, dtype=float)
            flat = np.ascontiguousarray(x.ravel())
            out = np.empty_like(flat)
            failures = _kernels.forward_kernel(flat, out, *params, float(self.root_tol), *self._uniform_tables())
            if failures:
                raise ConvergenceError(f"{failures} implicit solves failed to converge")
            return out.reshape(x.shape)
        return self._forward_numpy(x)

    def _forward_numpy(self, x):
        cut = self.cut_
        a = cut.a
        tol = float(self.root_tol)
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros_like(flat)
        left = flat < a
        right = flat > a
        w_tab, phi_tab, exc_tab = self._tables()

        if np.any(left):
            xl = flat[left]
            gap = a - xl

            def F(w, idx):
                # near w = 1, Phi(w) = a - tail(1 - w); subtract in that form
                hi_part = w > 0.5
                ww = np.where(hi_part, 0.5, w)
                ss = np.where(hi_part, 1.0 - w, 0.5)
                return np.where(hi_part, gap[idx] - cut._upper_tail(ss), cut._Phi(ww) - xl[idx])

            def dF(w, idx):
                return cut._phi(w)

            guess = np.interp(xl, phi_tab, w_tab)
            n = xl.size
            out[left] = solve_increasing(F, dF, np.zeros(n), np.ones(n), guess, tol)

        if np.any(right):
            target = flat[right] - a

            def F(w, idx):
                return cut._lower_excess(w) - target[idx]

            def dF(w, idx):
                return cut._one_minus_phi(w)

            guess = np.interp(target, exc_tab, w_tab)
            n = target.size
            out[right] = solve_increasing(F, dF, np.zeros(n), np.ones(n), guess, tol)

        np.clip(out, 0.0, _TOP, out=out)
        return out.reshape(x.shape)

    def derivative(self, x):
        """``f'(x)``: ``1/phi(f(x))`` on the left branch, ``1/(1 - phi(f(x)))`` on the right.

        Returns ``inf`` where the denominator underflows below ``1e-300``.
        """
        self._validate()
        x_arr = check_interval(x, "x", closed_lo=False, closed_hi=False)
        if np.any(x_arr == self.a):
            raise DomainError(f"f is not differentiable at the cut point a = {self.a}")
        return as_output(self._derivative(x_arr), x)

    def _derivative(self, x, fx=None):
        cut = self.cut_
        x = np.asarray(x, dtype=float)
        if fx is None:
            fx = self._forward(x)
        denom = np.where(x < self.a, cut._phi(fx), cut._one_minus_phi(fx))
        with np.errstate(divide="ignore"):
            return np.where(denom < 1e-300, np.inf, 1.0 / np.maximum(denom, 1e-300))

    def inverse_left(self, u):
        """Left-branch preimage ``Phi(u)`` in ``[0, a)``."""
        u_arr = check_interval(u, "u", closed_hi=False)
        return as_output(self.cut_._Phi(u_arr), u)

    def inverse_right(self, u):
        """Right-branch preimage ``u + a - Phi(u)`` in ``[a, 1)``."""
        u_arr = check_interval(u, "u", closed_hi=False)
        return as_output(self._inverse_right(u_arr), u)

    def _inverse_right(self, u):
        return self.a + self.cut_._lower_excess(u)

    def orbit(self, x, n):
        """``(x, f(x), ..., f^n(x))``; for array input the orbit axis comes first."""
        self._validate()
        if n < 0:
            raise ValueError("n must be non-negative")
        x_arr = check_interval(x, "x", closed_hi=False)
        out = np.empty((n + 1,) + x_arr.shape)
        out[0] = x_arr
        for k in range(n):
            out[k + 1] = self._forward(out[k])
        return out
