"""Ulam discretization of the transfer operator of ``f`` from exact preimages.

Cells are ``E_i = [i/n, (i+1)/n)``.  Because both branch inverses of ``f`` are
explicit, the preimage of a cell is the union of two intervals

    [Phi(u_j), Phi(u_{j+1}))  and  [r(u_j), r(u_{j+1})),   r(u) = u + a - Phi(u),

and ``P[i, j] = n * m(E_i  n  f^-1 E_j)`` is filled without any sampling.  Each
preimage interval is at most one cell wide (``f' >= 1``), so it straddles at
most one cell boundary.

The right endpoints are computed first and the left ones recovered as
``u_j + a - r(u_j)``; for dyadic ``a`` that subtraction is exact, so the two
preimage widths of every column add up to exactly ``1/n`` and the column
sums are 1 to rounding of the individual overlaps.
"""

import warnings

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import NoiseFloorWarning, PreconditionError, check_positive_int
from .fitting import DecaySeries
from .one_d_map import ExpandingMap

__all__ = ["UlamOperator", "cell_centers", "linear_density", "MAX_CELLS"]

MAX_CELLS = 2 ** 22


def cell_centers(n_cells):
    return (np.arange(n_cells) + 0.5) / n_cells


def linear_density(n_cells):
    """Cell averages of the density ``2x``."""
    return (2.0 * np.arange(n_cells) + 1.0) / n_cells


def _overlaps(p, q, cols, n):
    """Split intervals ``[p, q)`` (width <= 1/n) over cells; COO triplets of ``n * overlap``."""
    i = np.minimum(np.floor(p * n).astype(np.int64), n - 1)
    edge = (i + 1) / n
    split = q > edge
    if np.any(q > (i + 2) / n):
        raise RuntimeError("preimage interval wider than one cell")
    first = np.where(split, edge - p, q - p) * n
    rows = [i, i[split] + 1]
    data = [first, (q[split] - edge[split]) * n]
    cc = [cols, cols[split]]
    return np.concatenate(rows), np.concatenate(cc), np.concatenate(data)


class UlamOperator(TransformerMixin, BaseEstimator):
    """Row-stochastic Ulam matrix of ``f`` on a uniform grid.

    Parameters
    ----------
    n_cells : int, default=16384
        Number of cells; at least 2 and at most ``2**22``.

    ``fit(emap)`` builds ``matrix_`` (CSR, ``P[i, j]`` is the fraction of
    ``E_i`` mapped into ``E_j``).  ``transform`` pushes a cell-average density
    forward one step, i.e. applies the discretized transfer operator.

    Attributes
    ----------
    matrix_ : scipy.sparse.csr_matrix
    row_residual_, col_residual_ : float
        Largest deviation of a row or column sum from 1.
    """

    def __init__(self, n_cells=16384):
        self.n_cells = n_cells

    def fit(self, emap=None, y=None):
        emap = ExpandingMap() if emap is None else emap
        emap._validate()
        n = check_positive_int(self.n_cells, "n_cells", minimum=2)
        if n > MAX_CELLS:
            raise MemoryError(f"n_cells = {n} exceeds the limit of {MAX_CELLS}")
        cut = emap.cut_
        if cut.is_constant and cut.c != 0.5:
            raise PreconditionError("the Ulam operator needs a non-constant cut or constant 1/2")
        a = emap.a
        u = np.arange(n + 1) / n
        right = a + cut._lower_excess(u)
        right[0], right[-1] = a, 1.0
        left = (u + a) - right
        left[0], left[-1] = 0.0, a
        cols = np.arange(n)
        r1, c1, d1 = _overlaps(left[:-1], left[1:], cols, n)
        r2, c2, d2 = _overlaps(right[:-1], right[1:], cols, n)
        P = sp.coo_matrix(
            (np.concatenate([d1, d2]), (np.concatenate([r1, r2]), np.concatenate([c1, c2]))),
            shape=(n, n)).tocsr()
        P.sum_duplicates()
        P.eliminate_zeros()
        if cut.symmetric and n % 2 == 0:
            P = self._mirror(P, n)
        self.matrix_ = P
        self._push = P.T.tocsr()
        self.map_ = emap
        self.row_residual_ = float(np.max(np.abs(np.asarray(P.sum(axis=1)).ravel() - 1.0)))
        self.col_residual_ = float(np.max(np.abs(np.asarray(P.sum(axis=0)).ravel() - 1.0)))
        return self

    @staticmethod
    def _mirror(P, n):
        # f(1 - x) = 1 - f(x) gives P[n-1-i, n-1-j] = P[i, j]; impose it bit for bit
        # from the left half of the columns so reflection symmetry survives rounding
        coo = P.tocoo()
        keep = coo.col < n // 2
        rows = np.concatenate([coo.row[keep], n - 1 - coo.row[keep]])
        cols = np.concatenate([coo.col[keep], n - 1 - coo.col[keep]])
        data = np.concatenate([coo.data[keep], coo.data[keep]])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def transform(self, X):
        return self.push(X, 1)

    def _check_vector(self, v):
        check_is_fitted(self, "matrix_")
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_cells,):
            raise ValueError(f"expected a vector of {self.n_cells} cell values, got shape {v.shape}")
        return v

    def push(self, psi, steps=1):
        """``L^steps psi`` on cell averages."""
        v = self._check_vector(psi).copy()
        if steps < 0:
            raise ValueError("steps must be non-negative")
        for _ in range(steps):
            v = self._push @ v
        return v

    def trajectory(self, psi, steps):
        """Generator of ``L^k psi`` for ``k = 0..steps``."""
        v = self._check_vector(psi).copy()
        yield v
        for _ in range(steps):
            v = self._push @ v
            yield v

    def fit_window(self, series, n_lo=10):
        """``(n_lo, n_hi)`` with ``n_hi`` the last ``n`` before ``d_n < 10 / n_cells``."""
        floor = 10.0 / self.n_cells
        below = np.nonzero((series.values < floor) & (series.n > 0))[0]
        n_hi = int(series.n[below[0] - 1]) if below.size else int(series.n[-1])
        return n_lo, n_hi

    def measure_decay(self, lambda_density, n_max):
        """Total-variation distance ``d_n = mean |L^n lambda - 1|`` for ``n = 0..n_max``.

        ``meta["fit_window"]`` closes at the first ``n`` where ``d_n`` drops below
        ``10 / n_cells``; a :class:`NoiseFloorWarning` reports that it did.
        """
        lam = self._check_vector(lambda_density)
        if np.any(lam < 0):
            raise ValueError("lambda_density must be nonnegative")
        if abs(lam.mean() - 1.0) > 1e-12:
            raise ValueError(f"lambda_density must have mean 1, has {lam.mean()!r}")
        d = np.empty(n_max + 1)
        for k, v in enumerate(self.trajectory(lam, n_max)):
            d[k] = np.mean(np.abs(v - 1.0))
        series = DecaySeries(np.arange(n_max + 1), d, meta={"method": "ulam", "n_cells": self.n_cells})
        window = self.fit_window(series)
        series.meta["fit_window"] = window
        series.meta["floor"] = 10.0 / self.n_cells
        if window[1] < n_max:
            warnings.warn(f"TV distance below 10/n_cells after n = {window[1]}; fit window closed there",
                          NoiseFloorWarning, stacklevel=2)
        return series

    def antisymmetry_check(self, steps):
        """Push ``1/2 - x`` and track how far the iterates are from antisymmetric
        and non-increasing.

        Returns the maxima over ``k = 0..steps`` of ``max_i |v_i + v_{n-1-i}|``
        and of the largest positive successive difference, plus the per-step
        values and the constants ``C = violation * n_cells``.
        """
        check_is_fitted(self, "matrix_")
        if not self.map_.cut_.symmetric:
            raise PreconditionError("antisymmetry_check needs a symmetric cut")
        if self.n_cells % 2:
            raise ValueError("antisymmetry_check needs an even number of cells")
        psi = 0.5 - cell_centers(self.n_cells)
        anti = np.empty(steps + 1)
        mono = np.empty(steps + 1)
        for k, v in enumerate(self.trajectory(psi, steps)):
            anti[k] = np.max(np.abs(v + v[::-1]))
            mono[k] = max(float(np.max(np.diff(v))), 0.0)
        return {
            "antisymmetry": float(anti.max()),
            "monotonicity": float(mono.max()),
            "antisymmetry_C": float(anti.max() * self.n_cells),
            "monotonicity_C": float(mono.max() * self.n_cells),
            "per_step_antisymmetry": anti,
            "per_step_monotonicity": mono,
        }
