"""Concrete Young-tower partition of an expanding factor ``f``.

The base is the interval between the two points of the period-2 orbit,
``Delta0 = [x0, x0')``.  Pulling ``x0`` back along the left branch gives
``x0 > x1 > x2 > ... -> 0``, pulling ``x0'`` back along the right branch gives
``x0' < x1' < ... -> 1``.  With

    J_n  = [x_{n+1}, x_n)        J'_n = [x'_n, x'_{n+1})
    I_k  = right-branch preimage of J_{k-1}, inside (a, x0')
    I'_k = left-branch preimage of J'_{k-1}, inside [x0, a)

an orbit starting in ``I_k`` runs down ``J_{k-1}, ..., J_0`` and re-enters the
base after ``k + 1`` steps.

Everything is computed from the explicit branch inverses, never by
subtracting nearby numbers: ``x_{n+1} = x_n - G(x_n)`` with
``G(t) = int_0^t (1 - phi)``, and on the right the complements
``c_n = 1 - x'_n`` obey ``c_{n+1} = c_n - U(c_n)`` with ``U(s) = int_{1-s}^1 phi``.
Hence ``m(J_n) = G(x_n)`` and ``m(J'_n) = U(c_n)`` keep full relative precision
even where ``x_n`` is of order ``1e-5``.
"""

import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from ._validation import (
    ConvergenceError,
    PreconditionError,
    TruncationWarning,
    check_interval,
    check_positive_int,
)
from .fitting import PowerLawFit
from .one_d_map import ExpandingMap

__all__ = ["TowerPartition", "find_period2", "ReturnTimeOverflow"]

RETURN_CAP = 10 ** 7


class ReturnTimeOverflow(OverflowError):
    pass


def _require_tower(emap):
    if emap.cut_.is_constant:
        raise PreconditionError("tower requires non-constant cut")


def find_period2(emap, max_iter=10 ** 6):
    """Period-2 orbit ``x0 < a < x0'`` of ``f``.

    ``x0`` is the fixed point of ``h(x) = Phi(x + a - Phi(x))``, the composition
    of the two branch inverses, found by iterating ``h`` from ``a / 2``.
    """
    _require_tower(emap)
    cut = emap.cut_
    a = emap.a
    tol = float(emap.root_tol)
    x = np.asarray(0.5 * a)
    for _ in range(max_iter):
        nxt = cut._Phi(emap._inverse_right(x))
        if abs(float(nxt) - float(x)) <= tol:
            # one more application costs nothing and sharpens the estimate
            x = cut._Phi(emap._inverse_right(nxt))
            break
        x = nxt
    else:
        raise ConvergenceError(f"period-2 iteration did not settle in {max_iter} steps")
    x0 = float(x)
    return x0, float(emap._inverse_right(np.asarray(x0)))


class TowerPartition(BaseEstimator):
    """Tower partition over the period-2 base, built to a fixed depth.

    Parameters
    ----------
    depth : int, default=100000
        Number of levels ``N``.  The build stops early (and records it in
        ``truncated_``) once consecutive ``x_n`` or ``x'_n`` differ by less
        than ``10 * root_tol``.

    Attributes
    ----------
    x0_, x0p_ : float
        Period-2 endpoints.
    xs_ : ndarray, shape (N + 1,)
        ``x_0 > x_1 > ... > x_N``.
    comps_ : ndarray, shape (N + 1,)
        ``1 - x'_n``; ``xps_`` gives ``x'_n`` itself.
    mJ_, mJp_ : ndarray, shape (N + 1,)
        ``m(J_n)`` and ``m(J'_n)`` for ``n = 0..N``.
    mI_, mIp_ : ndarray, shape (N,)
        ``m(I_k)`` and ``m(I'_k)`` for ``k = 1..N`` (entry ``k - 1``).
    I_lo_, I_hi_, Ip_lo_, Ip_hi_ : ndarray, shape (N,)
        Interval endpoints, same indexing.
    depth_ : int
        Levels actually built.
    truncated_ : bool
    """

    def __init__(self, depth=100000):
        self.depth = depth

    def fit(self, emap=None, y=None):
        emap = ExpandingMap() if emap is None else emap
        emap._validate()
        _require_tower(emap)
        depth = check_positive_int(self.depth, "depth")
        cut = emap.cut_
        a = emap.a
        x0, x0p = find_period2(emap)
        stop = 10.0 * float(emap.root_tol)

        xs = np.empty(depth + 1)
        comps = np.empty(depth + 1)
        xs[0] = x0
        comps[0] = 1.0 - x0p
        params = emap._kernel_params()
        if params is not None:
            built = int(_kernels.tower_kernel(xs, comps, *params, stop))
        else:
            built = depth
            for n in range(depth):
                g = float(cut._lower_excess(np.asarray(xs[n])))
                u = float(cut._upper_tail(np.asarray(comps[n])))
                if g < stop or u < stop:
                    built = n
                    break
                xs[n + 1] = xs[n] - g
                comps[n + 1] = comps[n] - u
        if built < 1:
            raise ConvergenceError("no tower level resolvable at this root_tol")
        self.truncated_ = built < depth
        if self.truncated_:
            warnings.warn(f"tower truncated at depth {built}: levels below 10*root_tol",
                          TruncationWarning, stacklevel=2)
        xs = xs[: built + 1]
        comps = comps[: built + 1]

        self.map_ = emap
        self.a_ = a
        self.x0_, self.x0p_ = x0, x0p
        self.depth_ = built
        self.xs_ = xs
        self.comps_ = comps
        self.mJ_ = cut._lower_excess(xs)
        self.mJp_ = cut._upper_tail(comps)
        # I_k = [a + G(x_k), a + G(x_{k-1})),  I'_k = [a - U(c_{k-1}), a - U(c_k))
        self.I_lo_ = a + cut._lower_excess(xs[1:])
        self.I_hi_ = a + cut._lower_excess(xs[:-1])
        self.Ip_lo_ = a - cut._upper_tail(comps[:-1])
        self.Ip_hi_ = a - cut._upper_tail(comps[1:])
        self.mI_ = np.asarray(cut.excess_between(xs[1:], xs[:-1]), dtype=float)
        self.mIp_ = np.asarray(cut.tail_between(comps[1:], comps[:-1]), dtype=float)
        return self

    # -- views -------------------------------------------------------------
    @property
    def xps_(self):
        check_is_fitted(self, "comps_")
        return 1.0 - self.comps_

    def J(self, n):
        return (self.xs_[n + 1], self.xs_[n])

    def Jp(self, n):
        return (self.xps_[n], self.xps_[n + 1])

    def I(self, k):
        self._check_level(k)
        return (self.I_lo_[k - 1], self.I_hi_[k - 1])

    def Ip(self, k):
        self._check_level(k)
        return (self.Ip_lo_[k - 1], self.Ip_hi_[k - 1])

    def _check_level(self, k):
        check_is_fitted(self, "xs_")
        if not 1 <= k <= self.depth_:
            raise IndexError(f"level {k} outside 1..{self.depth_}")

    def locate(self, x):
        """Which piece of the partition contains ``x``.

        Returns ``("base", 0)``, ``("J", n)``, ``("Jp", n)``, or ``("gap", N)``
        for points beyond the deepest built level.
        """
        check_is_fitted(self, "xs_")
        x = float(check_interval(x, "x", closed_hi=False))
        if self.x0_ <= x < self.x0p_:
            return ("base", 0)
        if x < self.x0_:
            # xs_ decreasing: J_n holds x_{n+1} <= x < x_n
            n = int(np.searchsorted(-self.xs_, -x, side="left")) - 1
            return ("gap", self.depth_) if n >= self.depth_ else ("J", n)
        xps = self.xps_
        n = int(np.searchsorted(xps, x, side="right")) - 1
        return ("gap", self.depth_) if n >= self.depth_ else ("Jp", n)

    # -- tail of the return time -------------------------------------------
    def _remainder(self, n):
        """Exact contribution of levels deeper than ``N`` to the tail sum.

        ``sum_{l > N} m(I_l) = m(J_N)`` and ``sum_{l > N} (l - N) m(I_l) = x_N``,
        because the ``I_l`` are the right preimages of the ``J_{l-1}``, which
        tile ``[0, x_{l-1})``; likewise on the primed side.
        """
        N = self.depth_
        return (N - n) * (self.mJ_[N] + self.mJp_[N]) + self.xs_[N] + self.comps_[N]

    def tail_masses(self, exact_remainder=True):
        """``sum_{l > n} (l - n) m(I_l u I'_l)`` for ``n = 0..N-1``."""
        check_is_fitted(self, "xs_")
        N = self.depth_
        m = self.mI_ + self.mIp_
        levels = np.arange(1, N + 1, dtype=float)
        # reversed cumulative sums add the small deep terms first
        s0 = np.cumsum(m[::-1])[::-1]
        s1 = np.cumsum((levels * m)[::-1])[::-1]
        n = np.arange(N, dtype=float)
        truncated = s1 - n * s0
        if exact_remainder:
            return truncated + self._remainder(n)
        return truncated

    def tail_mass(self, n, exact_remainder=True):
        """``sum_{l > n} (l - n) (m(I_l) + m(I'_l))``.

        With ``exact_remainder`` the levels beyond the build depth are added in
        closed form.  Otherwise the sum over built levels is returned, with a
        remainder estimated from a power-law fit of the deepest decade; a
        :class:`TruncationWarning` is issued when that estimate exceeds 10% of
        the value.
        """
        check_is_fitted(self, "xs_")
        if not 0 <= n < self.depth_:
            raise ValueError(f"tail_mass needs 0 <= n < depth ({self.depth_}), got {n}")
        N = self.depth_
        m = self.mI_[n:] + self.mIp_[n:]
        levels = np.arange(n + 1, N + 1, dtype=float)
        truncated = float(np.sum(((levels - n) * m)[::-1]))
        if exact_remainder:
            return truncated + float(self._remainder(n))
        est = self._fitted_remainder(n)
        total = truncated + est
        if est > 0.1 * total:
            warnings.warn(f"estimated truncation error {est:.3g} exceeds 10% of tail mass {total:.3g}",
                          TruncationWarning, stacklevel=2)
        return truncated

    def _fitted_remainder(self, n):
        N = self.depth_
        lo = max(1, N // 10)
        m = self.mI_ + self.mIp_
        k = np.arange(1, N + 1)
        fit = PowerLawFit(n_lo=lo, n_hi=N).fit(k, m)
        p = -fit.exponent_
        C = math.exp(fit.intercept_)
        if p <= 2.0:
            return math.inf
        # integral approximation of sum_{l > N} (l - n) C l^{-p}
        return C * (N ** (2 - p) / (p - 2) + (N - n) * N ** (1 - p) / (p - 1))

    # -- asymptotics -------------------------------------------------------
    def asymptotic_report(self, n_lo=100, n_hi=None):
        """Log-log slopes of the tower sequences against their expected values.

        Left quantities follow ``alpha`` and right (primed) ones ``alpha_prime``.
        Expected values are ``None`` when the cut does not declare exponents.
        """
        check_is_fitted(self, "xs_")
        if self.depth_ < 100:
            raise ValueError("asymptotic_report needs depth >= 100")
        n_hi = self.depth_ if n_hi is None else n_hi
        cut = self.map_.cut_
        al, alp = cut.alpha, cut.alpha_prime
        N = self.depth_
        n = np.arange(N + 1)
        k = np.arange(1, N + 1)

        def expect(f, e):
            return None if e is None else f(e)

        series = {
            "x_n": (n, self.xs_, expect(lambda e: -1 / e, al)),
            "1-x'_n": (n, self.comps_, expect(lambda e: -1 / e, alp)),
            "m(J_n)": (n, self.mJ_, expect(lambda e: -(1 + 1 / e), al)),
            "m(J'_n)": (n, self.mJp_, expect(lambda e: -(1 + 1 / e), alp)),
            "m(I_k)": (k, self.mI_, expect(lambda e: -(2 + 1 / e), al)),
            "m(I'_k)": (k, self.mIp_, expect(lambda e: -(2 + 1 / e), alp)),
            # mean of f' over I_k is m(J_{k-1}) / m(I_k) because f maps I_k onto J_{k-1}
            "mean f' on I_k": (k, self.mJ_[:-1] / self.mI_, 1.0 if al is not None else None),
            "mean f' on I'_k": (k, self.mJp_[:-1] / self.mIp_, 1.0 if alp is not None else None),
        }
        report = {}
        for name, (idx, vals, expected) in series.items():
            fit = PowerLawFit(n_lo=n_lo, n_hi=n_hi).fit(idx, vals)
            entry = fit.summary()
            entry["expected"] = expected
            entry["deviation"] = None if expected is None else fit.exponent_ - expected
            report[name] = entry
        return report

    # -- distortion ----------------------------------------------------------
    def _pullback_log_derivative(self, i, w, side):
        """``y`` in level ``i`` with ``f^R(y) = w`` and ``log (f^R)'(y)``."""
        cut = self.map_.cut_
        a = self.a_
        logd = np.zeros_like(w)
        cur = w
        if side == "right":
            # I_i -> J_{i-1} -> ... -> J_0 -> Delta0 : left-branch steps, then one right-branch step
            for _ in range(i):
                logd -= np.log(cut._phi(cur))
                cur = cut._Phi(cur)
            logd -= np.log(cut._one_minus_phi(cur))
            y = a + cut._lower_excess(cur)
        else:
            comp = 1.0 - cur
            for _ in range(i):
                logd -= np.log(cut._one_minus_phi(1.0 - comp))
                comp = comp - cut._upper_tail(comp)
            logd -= np.log(cut._phi(1.0 - comp))
            y = a - cut._upper_tail(comp)
        return y, logd

    def distortion_ratio(self, i, w, w_prime, side="right"):
        """Per-pair ``|(f^R)'(y) / (f^R)'(z) - 1| / |f^R(y) - f^R(z)|``.

        ``y`` and ``z`` are the points of level ``i`` with images ``w`` and
        ``w_prime`` in the base; identical images give 0.
        """
        self._check_level(i)
        if side not in ("right", "left"):
            raise ValueError("side must be 'right' (I_i) or 'left' (I'_i)")
        w = np.atleast_1d(np.asarray(w, dtype=float))
        w_prime = np.atleast_1d(np.asarray(w_prime, dtype=float))
        _, l1 = self._pullback_log_derivative(i, w, side)
        _, l2 = self._pullback_log_derivative(i, w_prime, side)
        gap = np.abs(w - w_prime)
        ratio = np.abs(np.expm1(l1 - l2))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(gap > 0, ratio / np.where(gap > 0, gap, 1.0), 0.0)

    def distortion_check(self, i, samples=2000, seed=0, side="right"):
        """Empirical distortion constant on level ``i``.

        Pairs are drawn as uniform image points in the base and pulled back
        into ``I_i`` (or ``I'_i``), so the return map is applied exactly and the
        derivative along the orbit follows from the chain rule.  Also reports
        the inverse-derivative contraction bounds at the period-2 orbit:
        ``1/f'(x0) = phi(x0')`` and ``1/f'(x0') = 1 - phi(x0)``.
        """
        self._check_level(i)
        rng = np.random.default_rng(seed)
        w = rng.uniform(self.x0_, self.x0p_, samples)
        wp = rng.uniform(self.x0_, self.x0p_, samples)
        stat = self.distortion_ratio(i, w, wp, side)
        cut = self.map_.cut_
        inv = (float(cut._phi(np.asarray(self.x0p_))), float(cut._one_minus_phi(np.asarray(self.x0_))))
        return {
            "level": int(i),
            "side": side,
            "samples": int(samples),
            "statistic": float(np.max(stat)),
            "median": float(np.median(stat)),
            "beta": max(inv),
            "beta_min": min(inv),
        }

    # -- return time ---------------------------------------------------------
    def return_time(self, x, method="search"):
        """First return time to the base ``[x0, x0')``.

        ``method="search"`` locates ``x`` among the level intervals
        (``R = k + 1`` on ``I_k`` and ``I'_k``) and falls back to iterating
        ``f`` beyond the built depth; ``method="orbit"`` always iterates.
        """
        check_is_fitted(self, "xs_")
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any((x < self.x0_) | (x >= self.x0p_)):
            raise ValueError(f"return_time is defined on the base [{self.x0_}, {self.x0p_})")
        if method == "orbit":
            out = self._orbit_return_time(x)
        elif method == "search":
            out = self._search_return_time(x)
        else:
            raise ValueError("method must be 'search' or 'orbit'")
        return int(out[0]) if scalar else out

    def _search_return_time(self, x):
        N = self.depth_
        out = np.zeros(x.shape, dtype=np.int64)
        right = x >= self.a_
        # I_lo_ decreases with k: count the levels whose lower end is <= x
        cnt = np.searchsorted(self.I_lo_[::-1], x[right], side="right")
        k = N + 1 - cnt
        out[right] = np.where(cnt > 0, k + 1, 0)
        # Ip_lo_ increases with k
        xl = x[~right]
        kl = np.searchsorted(self.Ip_lo_, xl, side="right")
        # x >= x0 = Phi(x0') in exact arithmetic; a rounded Ip_lo_[0] may sit above it
        kl = np.maximum(kl, 1)
        ok = ~((kl == N) & (xl >= self.Ip_hi_[-1]))
        out[~right] = np.where(ok, kl + 1, 0)
        missing = out == 0
        if np.any(missing):
            out[missing] = self._orbit_return_time(x[missing])
        return out

    def _orbit_return_time(self, x, cap=RETURN_CAP):
        emap = self.map_
        cur = emap._forward(x.copy())
        out = np.zeros(x.shape, dtype=np.int64)
        active = np.arange(x.size)
        # f(x0) = x0' only to within the solver tolerance; shifting the base
        # by that much keeps the period-2 orbit out of it after one step
        shift = 10.0 * float(emap.root_tol)
        lo, hi = self.x0_ - shift, self.x0p_ - shift
        for n in range(1, cap + 1):
            back = (cur >= lo) & (cur < hi)
            out[active[back]] = n
            keep = ~back
            active, cur = active[keep], cur[keep]
            if active.size == 0:
                return out
            if np.any(cur == 0.0):
                # f(a) = 0 and 0 is fixed: such orbits never come back
                raise ReturnTimeOverflow("orbit reached the fixed point 0 and never returns")
            cur = emap._forward(cur)
        raise ReturnTimeOverflow(f"{active.size} orbits did not return within {cap} steps")

    # -- export ----------------------------------------------------------------
    def table(self):
        """Per-level columns ``n, x_n, xp_n, mJ_n, mJp_n, mI_n, mIp_n, tail_mass_n``
        for ``n = 1..N-1``."""
        check_is_fitted(self, "xs_")
        N = self.depth_
        n = np.arange(1, N)
        return {
            "n": n,
            "x_n": self.xs_[1:N],
            "xp_n": self.xps_[1:N],
            "mJ_n": self.mJ_[1:N],
            "mJp_n": self.mJp_[1:N],
            "mI_n": self.mI_[: N - 1],
            "mIp_n": self.mIp_[: N - 1],
            "tail_mass_n": self.tail_masses()[1:N],
        }
