"""Correlation estimators for ``f`` and for the baker's map ``B``.

One-dimensional correlations are computed either through the Ulam operator,
``int phi * L^n (psi - mean psi)``, or by composing orbits of a uniform
midpoint grid (Lebesgue measure is invariant, so the grid is a valid sample
of it).  Two-dimensional correlations use Monte Carlo over the square with a
counter-based generator, or a tensor grid (midpoints in ``x`` times
Gauss-Legendre nodes in ``y``).

Observables are vectorized callables: ``g(x)`` in one dimension, ``g(x, y)``
in two.
"""

import warnings

import numpy as np

from ._validation import NoiseFloorWarning, PreconditionError, check_positive_int
from .baker import BakerMap
from .fitting import DecaySeries, PowerLawFit, fit_power_law
from .one_d_map import ExpandingMap
from .transfer_operator import UlamOperator, cell_centers

__all__ = [
    "DecaySeries",
    "PowerLawFit",
    "fit_power_law",
    "OBSERVABLES_1D",
    "OBSERVABLES_2D",
    "cell_averages",
    "correlate_1d",
    "correlate_2d",
    "mc_correlations",
    "fibre_average",
    "projection_identity_check",
    "lower_bound_check",
]

OBSERVABLES_1D = {
    "id": lambda x: x,
    "cos": lambda x: np.cos(2 * np.pi * x),
}

OBSERVABLES_2D = {
    "x": lambda x, y: x,
    "y": lambda x, y: y,
    "xy": lambda x, y: x * y,
    "cos": lambda x, y: np.cos(2 * np.pi * x),
}

CHUNK = 2 ** 20


def cell_averages(g, n_cells, order=4):
    """Averages of ``g`` over the cells ``[i/n, (i+1)/n)`` by Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    left = np.arange(n_cells)[:, None] / n_cells
    pts = left + (nodes[None, :] + 1.0) / (2.0 * n_cells)
    return np.asarray(g(pts), dtype=float) @ weights / 2.0


def _series(values, n, stderr=None, **meta):
    return DecaySeries(np.asarray(n), np.asarray(values), None if stderr is None else np.asarray(stderr), meta=meta)


# -- one dimension -------------------------------------------------------------
def _ulam_1d(emap, phi_obs, psi_obs, n_max, n_cells, ulam=None):
    U = ulam if ulam is not None else UlamOperator(n_cells).fit(emap)
    phi_bar = cell_averages(phi_obs, U.n_cells)
    psi_bar = cell_averages(psi_obs, U.n_cells)
    psi_t = psi_bar - psi_bar.mean()
    signed = np.array([np.mean(phi_bar * v) for v in U.trajectory(psi_t, n_max)])
    return signed, None


def _quadrature_1d(emap, phi_obs, psi_obs, n_max, grid):
    x = cell_centers(grid)
    psi_t = psi_obs(x)
    psi_t = psi_t - psi_t.mean()
    signed = np.empty(n_max + 1)
    se = np.empty(n_max + 1)
    for n in range(n_max + 1):
        if n:
            x = emap._forward(x)
        prod = phi_obs(x) * psi_t
        signed[n] = prod.mean()
        se[n] = prod.std() / np.sqrt(grid)
    return signed, se


def correlate_1d(emap=None, phi_obs=None, psi_obs=None, n_max=100, method="ulam",
                 n_cells=2 ** 14, grid=10 ** 6, cross_check=False, signed=False):
    """``Cor_n = |int phi(f^n x) psi(x) dx - int phi int psi|`` for ``n = 0..n_max``.

    ``method="ulam"`` evaluates ``int phi * L^n psi~`` on cell averages;
    ``method="quadrature"`` iterates a midpoint grid of ``grid`` points and
    reports plug-in standard errors.  With ``cross_check`` the other method is
    run too and a warning is issued wherever the two differ by more than 10%
    while both lie above ``10 / n_cells``.  ``signed=True`` keeps the sign.
    """
    emap = ExpandingMap() if emap is None else emap
    phi_obs = OBSERVABLES_1D["id"] if phi_obs is None else phi_obs
    psi_obs = OBSERVABLES_1D["id"] if psi_obs is None else psi_obs
    n_max = check_positive_int(n_max, "n_max", minimum=0)
    if method == "ulam":
        vals, se = _ulam_1d(emap, phi_obs, psi_obs, n_max, n_cells)
    elif method == "quadrature":
        vals, se = _quadrature_1d(emap, phi_obs, psi_obs, n_max, grid)
    else:
        raise ValueError("method must be 'ulam' or 'quadrature'")
    meta = {"method": method, "n_cells": n_cells if method == "ulam" else None,
            "grid": grid if method == "quadrature" else None}
    if cross_check:
        other = "quadrature" if method == "ulam" else "ulam"
        o_vals, _ = (_quadrature_1d(emap, phi_obs, psi_obs, n_max, grid) if other == "quadrature"
                     else _ulam_1d(emap, phi_obs, psi_obs, n_max, n_cells))
        floor = 10.0 / n_cells
        both = (np.abs(vals) > floor) & (np.abs(o_vals) > floor)
        rel = np.abs(np.abs(vals) - np.abs(o_vals)) / np.maximum(np.abs(vals), 1e-300)
        bad = np.nonzero(both & (rel > 0.1))[0]
        meta["cross_check"] = {"method": other, "mismatch_n": bad.tolist()}
        if bad.size:
            warnings.warn(f"ulam and quadrature correlations differ by > 10% at {bad.size} values of n",
                          RuntimeWarning, stacklevel=2)
    out = vals if signed else np.abs(vals)
    return _series(out, np.arange(n_max + 1), se, **meta)


# -- two dimensions ------------------------------------------------------------
def _philox_chunk(seed, chunk, size):
    """Uniform points for one chunk; the chunk index lives in the counter, so
    any chunk (hence any prefix of samples) is reproducible on its own."""
    bitgen = np.random.Philox(key=seed, counter=[0, 0, chunk, 0])
    gen = np.random.Generator(bitgen)
    return gen.random(size), gen.random(size)


def _grid_chunks(n_x, n_y, chunk_x):
    nodes, weights = np.polynomial.legendre.leggauss(n_y)
    yn = (nodes + 1.0) / 2.0
    wy = weights / 2.0
    for start in range(0, n_x, chunk_x):
        xs = (np.arange(start, min(start + chunk_x, n_x)) + 0.5) / n_x
        x = np.repeat(xs, n_y)
        y = np.tile(yn, xs.size)
        w = np.tile(wy, xs.size) / n_x
        yield x, y, w


def mc_correlations(baker, pairs, n_list, n_samples=10 ** 6, seed=0, chunk=CHUNK,
                    method="montecarlo", n_y=256):
    """Signed correlations of several observable pairs from one shared orbit set.

    ``pairs`` maps a name to ``(phi, psi)``; ``phi`` is evaluated on ``B^n z``
    and ``psi`` on ``z``.  Returns ``{name: (values, stderr)}`` aligned with
    ``n_list``.  Standard errors are plug-in:
    ``sqrt((mean((phi_n psi~)^2) - mean(phi_n psi~)^2) / N)``.

    With ``method="quadrature"`` the sample is the tensor grid of
    ``n_samples // n_y`` midpoints in ``x`` times ``n_y`` Gauss-Legendre nodes
    in ``y``, weighted accordingly.
    """
    baker = BakerMap() if baker is None else baker
    n_list = np.unique(np.asarray(n_list, dtype=int))
    if n_list.size == 0 or n_list[0] < 0:
        raise ValueError("n_list must hold nonnegative integers")
    n_samples = check_positive_int(n_samples, "n_samples")
    names = list(pairs)

    if method == "montecarlo":
        n_chunks = -(-n_samples // chunk)

        def chunks():
            for c in range(n_chunks):
                size = min(chunk, n_samples - c * chunk)
                x, y = _philox_chunk(seed, c, size)
                yield x, y, np.full(size, 1.0 / n_samples)
    elif method == "quadrature":
        n_x = max(n_samples // n_y, 1)

        def chunks():
            yield from _grid_chunks(n_x, n_y, max(chunk // n_y, 1))
    else:
        raise ValueError("method must be 'montecarlo' or 'quadrature'")

    # pass 1: means of the psi observables, used to center them
    psi_mean = {k: 0.0 for k in names}
    for x, y, w in chunks():
        for k in names:
            psi_mean[k] += float(np.dot(w, pairs[k][1](x, y)))

    s_phi = {k: np.zeros(n_list.size) for k in names}
    s_prod = {k: np.zeros(n_list.size) for k in names}
    s_sq = {k: np.zeros(n_list.size) for k in names}
    s_psi = {k: 0.0 for k in names}
    for x, y, w in chunks():
        psi_t = {k: pairs[k][1](x, y) - psi_mean[k] for k in names}
        for k in names:
            s_psi[k] += float(np.dot(w, psi_t[k]))
        x = np.ascontiguousarray(x)
        y = np.ascontiguousarray(y)
        step = 0
        for idx, n in enumerate(n_list):
            while step < n:
                baker.step_inplace(x, y)
                step += 1
            for k in names:
                ph = pairs[k][0](x, y)
                prod = ph * psi_t[k]
                s_phi[k][idx] += np.dot(w, ph)
                s_prod[k][idx] += np.dot(w, prod)
                s_sq[k][idx] += np.dot(w, prod * prod)

    n_eff = n_samples if method == "montecarlo" else max(n_samples // n_y, 1) * n_y
    out = {}
    for k in names:
        est = s_prod[k] - s_phi[k] * s_psi[k]
        var = np.maximum(s_sq[k] - s_prod[k] ** 2, 0.0)
        out[k] = (est, np.sqrt(var / n_eff))
    return out


def correlate_2d(baker=None, phi=None, psi=None, n_max=100, n_samples=10 ** 6, seed=0,
                 method="montecarlo", n_list=None, signed=False):
    """``Cor_n`` of ``phi`` (evolved) against ``psi`` for the baker's map.

    ``meta["noise_flags"]`` lists every ``n`` where the standard error exceeds
    half the estimate; :class:`NoiseFloorWarning` is issued if there are any.
    """
    phi = OBSERVABLES_2D["x"] if phi is None else phi
    psi = OBSERVABLES_2D["y"] if psi is None else psi
    n_list = np.arange(n_max + 1) if n_list is None else np.unique(n_list)
    res = mc_correlations(baker, {"pair": (phi, psi)}, n_list, n_samples, seed, method=method)
    est, se = res["pair"]
    return _finish_2d(est, se, n_list, signed, method=method, n_samples=n_samples, seed=seed)


def _finish_2d(est, se, n_list, signed=False, **meta):
    vals = est if signed else np.abs(est)
    flags = n_list[se > 0.5 * np.abs(est)]
    meta["noise_flags"] = flags.tolist()
    if flags.size:
        warnings.warn(f"standard error exceeds half the estimate at {flags.size} values of n",
                      NoiseFloorWarning, stacklevel=3)
    return _series(vals, n_list, se, **meta)


def fibre_average(psi, n_y=256):
    """``x -> int_0^1 psi(x, y) dy`` by ``n_y``-point Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(n_y)
    yn = (nodes + 1.0) / 2.0
    wy = weights / 2.0

    def psi_bar(x):
        x = np.asarray(x, dtype=float)
        return psi(x[..., None], yn) @ wy

    return psi_bar


def projection_identity_check(baker=None, phi0_x=None, psi=None, n_list=(1, 5, 20, 100),
                              n_samples=10 ** 6, seed=0, grid=10 ** 6, mc=None):
    """Compare the 2-D correlation of ``phi0(x)`` and ``psi(x, y)`` with the 1-D
    correlation of ``phi0`` and the fibre average of ``psi``.

    The two are equal exactly when ``phi0`` is constant on fibres.  The left
    side is Monte Carlo (or taken from ``mc = (values, stderr)`` aligned with
    ``n_list``), the right side midpoint quadrature on ``grid`` points.
    Returns the discrepancies and the combined standard errors.
    """
    baker = BakerMap() if baker is None else baker
    phi0_x = OBSERVABLES_1D["id"] if phi0_x is None else phi0_x
    psi = OBSERVABLES_2D["xy"] if psi is None else psi
    n_list = np.unique(np.asarray(n_list, dtype=int))
    if mc is None:
        res = mc_correlations(baker, {"lhs": (lambda x, y: phi0_x(x), psi)}, n_list, n_samples, seed)
        lhs, lhs_se = res["lhs"]
    else:
        lhs, lhs_se = (np.asarray(v, dtype=float) for v in mc)
    psi_bar = fibre_average(psi)
    q_vals, q_se = _quadrature_1d(baker.factor_, phi0_x, psi_bar, int(n_list[-1]), grid)
    rhs, rhs_se = q_vals[n_list], q_se[n_list]
    disc = np.abs(lhs - rhs)
    se = np.sqrt(lhs_se ** 2 + rhs_se ** 2)
    return {
        "n": n_list,
        "lhs": lhs,
        "rhs": rhs,
        "discrepancy": disc,
        "combined_se": se,
        "z": np.where(se > 0, disc / np.where(se > 0, se, 1.0), 0.0),
        "max_discrepancy": float(disc.max()),
    }


def lower_bound_check(emap=None, n_max=2000, n_cells=2 ** 14, n_lo=10):
    """Sandwich chain for ``phi = psi = id`` on a symmetric cut, via Ulam.

    With ``w_n = L^n (1/2 - x)``:

    * ``(a)`` ``int (1/2 - x) w_n``
    * ``(b)`` ``(1/16) int |w_n|``, the total-variation distance of ``f_*^n lambda``
      from Lebesgue for the density ``lambda = 1/2 + x``, scaled by 1/16
    * ``(c)`` ``Cor_n(id, id)`` from :func:`correlate_1d`

    Checks ``|a - c| <= 10 / n_cells`` and ``a >= b - 10 / n_cells`` for every
    ``n`` in the fit window ``[n_lo, n_hi]`` (``n_hi`` where ``int |w_n|`` first drops
    below ``10 / n_cells``), and fits the exponent of ``Cor_n`` there.
    """
    emap = ExpandingMap() if emap is None else emap
    cut = emap.cut_
    if not cut.symmetric:
        raise PreconditionError("lower_bound_check needs a symmetric cut")
    if cut.is_constant:
        raise PreconditionError("lower_bound_check needs a non-constant cut")
    U = UlamOperator(n_cells).fit(emap)
    v0 = 0.5 - cell_centers(n_cells)
    a = np.empty(n_max + 1)
    tv = np.empty(n_max + 1)
    for k, w in enumerate(U.trajectory(v0, n_max)):
        a[k] = np.mean(v0 * w)
        tv[k] = np.mean(np.abs(w))
    b = tv / 16.0
    cor = np.abs(_ulam_1d(emap, OBSERVABLES_1D["id"], OBSERVABLES_1D["id"], n_max, n_cells, ulam=U)[0])
    slack = 10.0 / n_cells
    n = np.arange(n_max + 1)
    below = np.nonzero(tv < slack)[0]
    n_hi = int(below[0] - 1) if below.size else n_max
    win = (n >= n_lo) & (n <= n_hi)
    fit = PowerLawFit(n_lo=n_lo, n_hi=n_hi).fit(n, cor)
    expected = -1.0 / cut.alpha if cut.alpha else None
    return {
        "n": n,
        "a": a,
        "b": b,
        "cor": cor,
        "slack": slack,
        "window": (n_lo, n_hi),
        "cor0": float(cor[0]),
        "equality_ok": bool(np.all(np.abs(a[win] - cor[win]) <= slack)),
        "equality_max": float(np.max(np.abs(a[win] - cor[win]))),
        "inequality_ok": bool(np.all(a[win] >= b[win] - slack)),
        "inequality_min_margin": float(np.min(a[win] - b[win])),
        "exponent": fit.exponent_,
        "expected_exponent": expected,
        "fit": fit.summary(),
    }
