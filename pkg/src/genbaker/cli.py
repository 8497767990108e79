"""Command-line experiment runner.

Exit status: 0 on success, 1 when a verification check fails, 2 on usage,
configuration or precondition errors.
"""

import argparse
import csv
import io
import json
import os
import sys
import warnings

import numpy as np

from ._validation import DomainError, PreconditionError
from .baker import BakerMap
from .config import ConfigError, load_config
from .correlation import (
    OBSERVABLES_1D,
    OBSERVABLES_2D,
    correlate_1d,
    correlate_2d,
    lower_bound_check,
)
from .fitting import InsufficientPointsError
from .one_d_map import ExpandingMap
from .tower import TowerPartition
from .transfer_operator import UlamOperator, linear_density
from .verify import run_verify

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- output helpers ------------------------------------------------------------
def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(header, columns, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)


def _outpath(cfg, name):
    if cfg.output in (None, "", "-"):
        return None
    os.makedirs(cfg.output, exist_ok=True)
    return os.path.join(cfg.output, name)


def _floats(text, name):
    try:
        return np.array([float(s) for s in text.split(",") if s.strip()])
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


# -- subcommands -----------------------------------------------------------------
def cmd_eval(cfg, args):
    emap = ExpandingMap(cfg.make_cut(), root_tol=cfg.root_tol)
    x = _floats(args.x, "x")
    fx = emap.forward(x)
    with np.errstate(all="ignore"):
        interior = (x > 0) & (x != emap.a)
        dfx = np.full(x.shape, np.nan)
        if np.any(interior):
            dfx[interior] = emap.derivative(x[interior])
    write_csv(["x", "fx", "dfx", "inverse_left", "inverse_right"],
              [x, fx, dfx, emap.inverse_left(x), emap.inverse_right(x)], _outpath(cfg, "eval.csv"))
    return EXIT_OK


def cmd_orbit2d(cfg, args):
    B = BakerMap(ExpandingMap(cfg.make_cut(), root_tol=cfg.root_tol))
    rows = B.orbit(args.x, args.y, cfg.nmax)
    write_csv(["step", "x", "y", "contraction"],
              [rows[:, 0].astype(int), rows[:, 1], rows[:, 2], rows[:, 3]], _outpath(cfg, "orbit2d.csv"))
    return EXIT_OK


def cmd_tower(cfg, args):
    emap = ExpandingMap(cfg.make_cut(), root_tol=cfg.root_tol)
    T = TowerPartition(depth=cfg.depth).fit(emap)
    tab = T.table()
    cols = list(tab)
    write_csv(cols, [tab[c] for c in cols], _outpath(cfg, "tower.csv"))
    summary = {"config": cfg.to_dict(), "x0": T.x0_, "x0p": T.x0p_, "depth": T.depth_,
               "truncated": T.truncated_}
    if T.depth_ >= 100:
        summary["slopes"] = T.asymptotic_report()
    path = _outpath(cfg, "tower.json")
    if path:
        write_json(summary, path)
    return EXIT_OK


def _density(spec, n):
    if spec == "uniform":
        return np.ones(n)
    if spec == "linear":
        return linear_density(n)
    try:
        data = np.loadtxt(spec, delimiter=",", ndmin=1)
    except OSError:
        raise UsageError(f"--density: cannot read {spec!r}") from None
    data = np.asarray(data, dtype=float).ravel()
    if data.size != n:
        raise UsageError(f"--density: file has {data.size} values, expected {n}")
    return data / data.mean()


def cmd_ulam(cfg, args):
    emap = ExpandingMap(cfg.make_cut(), root_tol=cfg.root_tol)
    U = UlamOperator(cfg.cells).fit(emap)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = U.measure_decay(_density(args.density, cfg.cells), args.steps or cfg.nmax)
    write_csv(["n", "tv_distance"], [s.n, s.values], _outpath(cfg, "ulam.csv"))
    summary = {"config": cfg.to_dict(), "row_residual": U.row_residual_,
               "col_residual": U.col_residual_, "fit_window": list(s.meta["fit_window"])}
    try:
        summary["fit"] = s.fit(*s.meta["fit_window"]).summary()
    except InsufficientPointsError as exc:
        summary["fit"] = {"error": str(exc)}
    path = _outpath(cfg, "ulam.json")
    if path:
        write_json(summary, path)
    return EXIT_OK


def _fit_summary(series, n_lo, n_hi):
    try:
        return series.fit(n_lo, n_hi).summary()
    except InsufficientPointsError as exc:
        return {"error": str(exc)}


def cmd_decay1d(cfg, args):
    emap = ExpandingMap(cfg.make_cut(), root_tol=cfg.root_tol)
    obs = OBSERVABLES_1D[args.observable]
    s = correlate_1d(emap, obs, obs, cfg.nmax, method=args.method, n_cells=cfg.cells)
    stderr = s.stderr if s.stderr is not None else np.zeros_like(s.values)
    write_csv(["n", "corr", "stderr"], [s.n, s.values, stderr], _outpath(cfg, "decay1d.csv"))
    path = _outpath(cfg, "decay1d.json")
    if path:
        write_json({"config": cfg.to_dict(), "fit": _fit_summary(s, 10, cfg.nmax)}, path)
    return EXIT_OK


def cmd_decay2d(cfg, args):
    B = BakerMap(ExpandingMap(cfg.make_cut(), root_tol=cfg.root_tol))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = correlate_2d(B, OBSERVABLES_2D[args.phi], OBSERVABLES_2D[args.psi], cfg.nmax,
                         cfg.samples, cfg.seed)
    write_csv(["n", "corr", "stderr"], [s.n, s.values, s.stderr], _outpath(cfg, "decay2d.csv"))
    path = _outpath(cfg, "decay2d.json")
    if path:
        n_hi = s.noise_window_end()
        write_json({"config": cfg.to_dict(), "noise_flags": s.meta["noise_flags"],
                    "fit": _fit_summary(s, 10, n_hi)}, path)
    return EXIT_OK


def cmd_lowerbound(cfg, args):
    emap = ExpandingMap(cfg.make_cut(), root_tol=cfg.root_tol)
    r = lower_bound_check(emap, n_max=cfg.nmax, n_cells=cfg.cells)
    write_csv(["n", "a", "b", "cor"], [r["n"], r["a"], r["b"], r["cor"]], _outpath(cfg, "lowerbound.csv"))
    path = _outpath(cfg, "lowerbound.json")
    if path:
        keep = ("slack", "window", "cor0", "equality_ok", "equality_max", "inequality_ok",
                "inequality_min_margin", "exponent", "expected_exponent", "fit")
        write_json({"config": cfg.to_dict(), **{k: r[k] for k in keep}}, path)
    ok = r["equality_ok"] and r["inequality_ok"]
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg, args):
    report = run_verify(cfg)
    path = _outpath(cfg, "report.json") or "report.json"
    write_json(report, path)
    for c in report["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}  value={c['value']}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


COMMANDS = {
    "eval": cmd_eval,
    "orbit2d": cmd_orbit2d,
    "tower": cmd_tower,
    "ulam": cmd_ulam,
    "decay1d": cmd_decay1d,
    "decay2d": cmd_decay2d,
    "lowerbound": cmd_lowerbound,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--kind", help="constant | linear | symmetric_power | asymmetric_power | custom")
    common.add_argument("--alpha")
    common.add_argument("--alpha-prime", dest="alpha_prime")
    common.add_argument("--c", help="value of a constant cut")
    common.add_argument("--table", help="CSV table t,phi for a custom cut")
    common.add_argument("--depth")
    common.add_argument("--cells")
    common.add_argument("--nmax")
    common.add_argument("--samples")
    common.add_argument("--seed")
    common.add_argument("--threads", help="worker cap (recorded; every kernel here is serial, so results never depend on it)")
    common.add_argument("--output", "-o", help="output directory ('-' for stdout)")
    common.add_argument("--suites", help="comma-separated suites for verify")
    common.add_argument("--root-tol", dest="root_tol")

    p = _Parser(prog="genbaker", description="Generalized baker's map experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    e = sub.add_parser("eval", parents=[common], help="f, f' and branch inverses at points")
    e.add_argument("--x", required=True, help="comma-separated points in [0, 1)")
    o = sub.add_parser("orbit2d", parents=[common], help="orbit of B from one point")
    o.add_argument("--x", type=float, required=True)
    o.add_argument("--y", type=float, required=True)
    sub.add_parser("tower", parents=[common], help="tower partition table and slopes")
    u = sub.add_parser("ulam", parents=[common], help="total-variation decay via the Ulam operator")
    u.add_argument("--steps", type=int)
    u.add_argument("--density", default="linear", help="uniform | linear | path to CSV of cell values")
    d1 = sub.add_parser("decay1d", parents=[common], help="1-D correlation decay")
    d1.add_argument("--method", choices=["ulam", "quadrature"], default="ulam")
    d1.add_argument("--observable", choices=sorted(OBSERVABLES_1D), default="id")
    d2 = sub.add_parser("decay2d", parents=[common], help="2-D correlation decay by Monte Carlo")
    d2.add_argument("--phi", choices=sorted(OBSERVABLES_2D), default="y")
    d2.add_argument("--psi", choices=sorted(OBSERVABLES_2D), default="x")
    sub.add_parser("lowerbound", parents=[common], help="lower-bound chain for symmetric cuts")
    sub.add_parser("verify", parents=[common], help="run the verification suites")
    return p


_OVERRIDES = ("kind", "alpha", "alpha_prime", "c", "table", "depth", "cells", "nmax", "samples",
              "seed", "threads", "output", "suites", "root_tol")


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        overrides = {k: getattr(args, k) for k in _OVERRIDES}
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, ConfigError, PreconditionError, DomainError) as exc:
        print(f"genbaker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
