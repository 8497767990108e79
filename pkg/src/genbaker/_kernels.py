"""Compiled elementwise kernels for the closed-form cut families.

Same bracketed Newton scheme as ``one_d_map.solve_increasing``, one element
at a time.  The cut is passed as plain floats:
``(a, c0, alpha, c1, alpha_prime)`` for power cuts; a constant cut ``c`` is
encoded with ``alpha = 0`` and ``c0 = c``.
"""

import numpy as np
from numba import njit

MAXITER = 200


@njit(cache=True, inline="always")
def _pw(t, p):
    if p == 1.0:
        return t
    if p == 2.0:
        return t * t
    if p == 3.0:
        return t * t * t
    return t ** p


@njit(cache=True)
def _phi(t, a, c0, al, c1, alp):
    if al == 0.0:
        return c0
    if t <= 0.5:
        return 1.0 - c0 * _pw(t, al)
    return c1 * _pw(1.0 - t, alp)


@njit(cache=True)
def _one_minus_phi(t, a, c0, al, c1, alp):
    if al == 0.0:
        return 1.0 - c0
    if t <= 0.5:
        return c0 * _pw(t, al)
    return 1.0 - c1 * _pw(1.0 - t, alp)


@njit(cache=True)
def _lower_excess(t, a, c0, al, c1, alp):
    if al == 0.0:
        return (1.0 - c0) * t
    if t <= 0.5:
        return c0 * _pw(t, al + 1.0) / (al + 1.0)
    s = 1.0 - t
    return (t - a) + c1 * _pw(s, alp + 1.0) / (alp + 1.0)


@njit(cache=True)
def _left_residual(w, x, gap, a, c0, al, c1, alp):
    # Phi(w) - x, written as (a - x) - tail(1 - w) above 1/2
    if al == 0.0:
        return c0 * w - x
    if w <= 0.5:
        return w - c0 * _pw(w, al + 1.0) / (al + 1.0) - x
    s = 1.0 - w
    return gap - c1 * _pw(s, alp + 1.0) / (alp + 1.0)


@njit(cache=True)
def _guess(v, span, tab):
    # tab[k] is the root for target k * span / (tab.size - 1)
    m = tab.size - 1
    pos = v / span * m
    if pos <= 0.0:
        return tab[0]
    if pos >= m:
        return tab[m]
    j = int(pos)
    frac = pos - j
    return tab[j] + (tab[j + 1] - tab[j]) * frac


@njit(cache=True)
def _solve_one(x, left, a, c0, al, c1, alp, tol, guess):
    lo = 0.0
    hi = 1.0
    w = min(max(guess, lo), hi)
    gap = a - x
    target = x - a
    for it in range(MAXITER):
        if left:
            r = _left_residual(w, x, gap, a, c0, al, c1, alp)
        else:
            r = _lower_excess(w, a, c0, al, c1, alp) - target
        if r < 0.0:
            lo = w
        elif r > 0.0:
            hi = w
        else:
            lo = w
            hi = w
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        if left:
            d = _phi(w, a, c0, al, c1, alp)
        else:
            d = _one_minus_phi(w, a, c0, al, c1, alp)
        ok = d > 0.0
        cand = 0.0
        if ok:
            step = r / d
            cand = w - step - np.sign(step) * (0.25 * tol)
            ok = lo < cand < hi
            if it >= 8 and it % 2 == 1:
                ok = False
        w = cand if ok else 0.5 * (lo + hi)
    return np.nan


@njit(cache=True)
def forward_kernel(x, out, a, c0, al, c1, alp, tol, left_tab, right_tab):
    top = 1.0 - 2.0 ** -52
    failures = 0
    for i in range(x.size):
        xi = x[i]
        if xi < a:
            g = _guess(xi, a, left_tab)
            w = _solve_one(xi, True, a, c0, al, c1, alp, tol, g)
        elif xi > a:
            g = _guess(xi - a, 1.0 - a, right_tab)
            w = _solve_one(xi, False, a, c0, al, c1, alp, tol, g)
        else:
            w = 0.0
        if w != w:
            failures += 1
            w = 0.0
        if w > top:
            w = top
        elif w < 0.0:
            w = 0.0
        out[i] = w
    return failures


@njit(cache=True)
def baker_step_kernel(x, y, contraction, a, c0, al, c1, alp, tol, left_tab, right_tab):
    """One step of B in place; optionally multiplies the fibre contraction."""
    top = 1.0 - 2.0 ** -52
    failures = 0
    track = contraction.size == x.size
    for i in range(x.size):
        xi = x[i]
        if xi < a:
            g = _guess(xi, a, left_tab)
            w = _solve_one(xi, True, a, c0, al, c1, alp, tol, g)
        elif xi > a:
            g = _guess(xi - a, 1.0 - a, right_tab)
            w = _solve_one(xi, False, a, c0, al, c1, alp, tol, g)
        else:
            w = 0.0
        if w != w:
            failures += 1
            w = 0.0
        if w > top:
            w = top
        elif w < 0.0:
            w = 0.0
        ph = _phi(w, a, c0, al, c1, alp)
        if xi <= a:
            y[i] = ph * y[i]
            fac = ph
        else:
            y[i] = y[i] + ph * (1.0 - y[i])
            fac = _one_minus_phi(w, a, c0, al, c1, alp)
        if track:
            contraction[i] *= fac
        x[i] = w
    return failures


@njit(cache=True)
def _upper_tail(s, a, c0, al, c1, alp):
    # int_{1-s}^1 phi
    if al == 0.0:
        return c0 * s
    if s <= 0.5:
        return c1 * _pw(s, alp + 1.0) / (alp + 1.0)
    t = 1.0 - s
    return a - t + _lower_excess(t, a, c0, al, c1, alp)


@njit(cache=True)
def tower_kernel(xs, comps, a, c0, al, c1, alp, stop):
    """Fill ``xs[n+1] = xs[n] - G(xs[n])`` and ``comps[n+1] = comps[n] - U(comps[n])``.

    Returns the number of levels filled before a step falls below ``stop``.
    """
    for n in range(xs.size - 1):
        g = _lower_excess(xs[n], a, c0, al, c1, alp)
        u = _upper_tail(comps[n], a, c0, al, c1, alp)
        if g < stop or u < stop:
            return n
        xs[n + 1] = xs[n] - g
        comps[n + 1] = comps[n] - u
    return xs.size - 1
