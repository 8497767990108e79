"""Verification runner: executes the check suites for one configuration."""

import math
import warnings

import numpy as np

from ._validation import PreconditionError
from .correlation import OBSERVABLES_2D, correlate_1d, lower_bound_check, mc_correlations
from .baker import BakerMap
from .fitting import InsufficientPointsError, PowerLawFit
from .one_d_map import ExpandingMap
from .tower import TowerPartition
from .transfer_operator import UlamOperator, linear_density

__all__ = ["Check", "run_verify"]


class Check:
    """One named pass/fail record for ``report.json``."""

    def __init__(self, name, passed, value, expected=None, tolerance=None):
        self.name = name
        self.passed = bool(passed)
        self.value = value
        self.expected = expected
        self.tolerance = tolerance

    def to_dict(self):
        return {"name": self.name, "pass": self.passed, "value": _plain(self.value),
                "expected": _plain(self.expected), "tolerance": _plain(self.tolerance)}


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _close(name, value, expected, tol):
    return Check(name, abs(value - expected) <= tol, value, expected, tol)


def _at_most(name, value, bound):
    return Check(name, value <= bound, value, f"<= {bound}", bound)


def _gamma(cut):
    if cut.alpha is None or cut.alpha_prime is None:
        return None
    return max(cut.alpha, cut.alpha_prime)


def suite_cut(cut, rng):
    t = np.sort(rng.uniform(0, 1, (1000, 2)), axis=1)
    checks = []
    p1, p2 = cut.phi(t[:, 0]), cut.phi(t[:, 1])
    checks.append(_at_most("cut.monotone", float(np.max(p2 - p1, initial=0.0)), 0.0))
    grid = np.linspace(0, 1, 1001)
    vals = cut.phi(grid)
    checks.append(Check("cut.range", bool(np.all((vals >= 0) & (vals <= 1))),
                        [float(vals.min()), float(vals.max())], "[0, 1]"))
    h = 1e-6
    pts = rng.uniform(0.01, 0.99, 100)
    pts = pts[np.abs(pts - 0.5) > 1e-3]
    ftc = np.abs((cut.Phi(pts + h) - cut.Phi(pts - h)) / (2 * h) - cut.phi(pts))
    checks.append(_at_most("cut.antiderivative", float(ftc.max()), 1e-6))
    if cut.symmetric:
        s = rng.uniform(0, 1, 1000)
        err = np.abs(1 - cut.phi(s) - cut.phi(1 - s)).max()
        checks.append(_at_most("cut.symmetry", float(err), 1e-14))
        checks.append(_close("cut.area", float(cut.Phi(1.0)), 0.5, 1e-14))
    return checks


def suite_measure(emap, rng):
    cut = emap.cut_
    u = rng.uniform(0, 1, 1000)
    ident = np.abs(cut.Phi(u) + (emap.inverse_right(u) - emap.a) - u).max()
    # excess over the solver tolerance, net of the f'(x) * ulp(x) input rounding
    with np.errstate(divide="ignore"):
        slopes = (1 / cut.phi(u), 1 / cut.one_minus_phi(u))
    rt = 0.0
    for inv, slope in zip((emap.inverse_left, emap.inverse_right), slopes):
        x = inv(u)
        excess = np.abs(emap.forward(x) - u) - slope * np.spacing(np.abs(x))
        rt = max(rt, float(excess.max()))
    x = rng.uniform(1e-6, 1 - 1e-6, 1000)
    x = x[np.abs(x - emap.a) > 1e-9]
    expand = float(np.min(emap.derivative(x)))
    return [
        _at_most("measure.preservation_identity", float(ident), 1e-13),
        _at_most("measure.round_trip", float(rt), 10 * emap.root_tol),
        Check("measure.expansion", expand >= 1 - 1e-12, expand, ">= 1", 1e-12),
    ]


def suite_tower(emap, cfg, exponents):
    T = TowerPartition(depth=cfg.depth).fit(emap)
    cut = emap.cut_
    checks = []
    fx0 = emap.forward(T.x0_)
    fx0p = emap.forward(T.x0p_)
    checks.append(_close("tower.period2_forward", float(fx0), T.x0p_, 10 * emap.root_tol))
    checks.append(_close("tower.period2_back", float(fx0p), T.x0_, 10 * emap.root_tol))
    if cut.kind == "linear":
        checks.append(_close("tower.x0_closed_form", T.x0_, math.sqrt(2) - 1, 10 * emap.root_tol))
    if cut.symmetric:
        err = float(np.max(np.abs(T.xps_ - (1 - T.xs_))))
        checks.append(_at_most("tower.mirror_sequences", err, 10 * emap.root_tol))
    if T.depth_ >= 100:
        rep = T.asymptotic_report(n_lo=100, n_hi=T.depth_)
        tol = 0.05 if cut.symmetric else 0.07
        for name in ("x_n", "1-x'_n", "m(J_n)", "m(J'_n)", "m(I_k)", "m(I'_k)"):
            entry = rep[name]
            if entry["expected"] is not None:
                checks.append(_close(f"tower.slope[{name}]", entry["exponent"], entry["expected"], tol))
        exponents["x_n"] = rep["x_n"]["exponent"]
    gamma = _gamma(cut)
    tail = T.tail_masses()
    n_hi = min(10 ** 4, T.depth_ - 1)
    if n_hi >= 1000:
        fit = PowerLawFit(n_lo=100, n_hi=n_hi).fit(np.arange(tail.size), tail)
        exponents["tail"] = fit.exponent_
        if gamma is not None:
            checks.append(_close("tower.tail_mass_slope", fit.exponent_, -1 / gamma, 0.1))
    return checks


def suite_ulam(emap, cfg):
    U = UlamOperator(cfg.cells).fit(emap)
    checks = [
        _at_most("ulam.row_sums", U.row_residual_, 1e-12),
        _at_most("ulam.column_sums", U.col_residual_, 1e-12),
        _at_most("ulam.nonnegative", float(-min(U.matrix_.data.min(), 0.0)), 0.0),
    ]
    if emap.cut_.symmetric and cfg.cells % 2 == 0:
        r = U.antisymmetry_check(100)
        checks.append(_at_most("ulam.antisymmetry", r["antisymmetry"], 1e-3))
        checks.append(_at_most("ulam.monotonicity", r["monotonicity"], 1e-3))
    return checks, U


def suite_decay(emap, cfg, U, exponents):
    cut = emap.cut_
    gamma = _gamma(cut)
    checks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        series = U.measure_decay(linear_density(U.n_cells), cfg.nmax)
    lo, hi = series.meta["fit_window"]
    try:
        fit = series.fit(lo, hi)
        exponents["tv"] = fit.exponent_
        if gamma is not None:
            checks.append(_close("decay.tv_exponent", fit.exponent_, -1 / gamma, 0.15))
    except InsufficientPointsError as exc:
        checks.append(Check("decay.tv_exponent", False, str(exc), None if gamma is None else -1 / gamma, 0.15))
    cor = correlate_1d(emap, n_max=min(cfg.nmax, hi), n_cells=U.n_cells)
    try:
        fit = cor.fit(lo, hi)
        exponents["corr1d"] = fit.exponent_
        if gamma is not None:
            checks.append(_close("decay.corr1d_exponent", fit.exponent_, -1 / gamma, 0.15))
    except InsufficientPointsError as exc:
        checks.append(Check("decay.corr1d_exponent", False, str(exc), None, 0.15))
    return checks


def suite_lowerbound(emap, cfg):
    cut = emap.cut_
    if not cut.symmetric:
        return [Check("lowerbound.skipped_asymmetric", True, "symmetric cut required", None)]
    r = lower_bound_check(emap, n_max=cfg.nmax, n_cells=cfg.cells)
    return [
        _close("lowerbound.cor0", r["cor0"], 1 / 12, 10.0 / cfg.cells),
        _at_most("lowerbound.equality", r["equality_max"], r["slack"]),
        Check("lowerbound.inequality", r["inequality_ok"], r["inequality_min_margin"], ">= -slack", r["slack"]),
        _close("lowerbound.exponent", r["exponent"], r["expected_exponent"], 0.15),
    ]


def suite_decay2d(emap, cfg, exponents):
    B = BakerMap(emap)
    O = OBSERVABLES_2D
    n_list = np.arange(0, min(cfg.nmax, 200) + 1)
    res = mc_correlations(B, {"x_x": (O["x"], O["x"]), "y_x": (O["y"], O["x"])},
                          n_list, cfg.samples, cfg.seed)
    one_d = correlate_1d(emap, n_max=int(n_list[-1]), n_cells=cfg.cells, signed=True).values
    est, se = res["x_x"]
    z = np.abs(est - one_d) / np.maximum(se, 1e-300)
    checks = [_at_most("decay2d.projects_to_1d_max_z", float(z[1:].max()), 5.0)]
    est, se = res["y_x"]
    ok = (n_list >= 10) & (se <= 0.5 * np.abs(est))
    if ok.sum() >= 8:
        fit = PowerLawFit().fit(n_list[ok], np.abs(est[ok]))
        exponents["corr2d"] = fit.exponent_
        gamma = _gamma(emap.cut_)
        if gamma is not None:
            checks.append(_close("decay2d.exponent", fit.exponent_, -1 / gamma, 0.25))
    else:
        checks.append(Check("decay2d.exponent", False, "too few points above the noise floor", None))
    return checks


def run_verify(cfg):
    """Run the enabled suites in a fixed order; returns the report mapping."""
    cut = cfg.make_cut()
    emap = ExpandingMap(cut, root_tol=cfg.root_tol)
    if cut.is_constant and any(s in cfg.suites for s in ("tower", "decay", "lowerbound", "decay2d")):
        raise PreconditionError("tower requires non-constant cut")
    rng = np.random.default_rng(cfg.seed)
    exponents = {}
    suites = {}
    U = None
    for name in ("cut", "measure", "tower", "ulam", "decay", "lowerbound", "decay2d"):
        if name not in cfg.suites:
            continue
        if name == "cut":
            checks = suite_cut(cut, rng)
        elif name == "measure":
            checks = suite_measure(emap, rng)
        elif name == "tower":
            checks = suite_tower(emap, cfg, exponents)
        elif name == "ulam":
            checks, U = suite_ulam(emap, cfg)
        elif name == "decay":
            if U is None:
                U = UlamOperator(cfg.cells).fit(emap)
            checks = suite_decay(emap, cfg, U, exponents)
        elif name == "lowerbound":
            checks = suite_lowerbound(emap, cfg)
        else:
            checks = suite_decay2d(emap, cfg, exponents)
        suites[name] = checks
    flat = [c.to_dict() for name in suites for c in suites[name]]
    return {
        "config": cfg.to_dict(),
        "cut": cut.to_config(),
        "suites": list(suites),
        "checks": flat,
        "exponents": {k: float(v) for k, v in exponents.items()},
        "passed": all(c["pass"] for c in flat),
    }
