"""Command-line front end: simulate chains, fit models, estimate the
recurrence exponent, run replication studies, and calibrate polynomials.

Exit codes: 0 success, 1 user error (flags, config, data), 2 numeric or
estimation failure. Data goes to standard output or --out files; the
resolved configuration, seeds, and reports go to standard error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys

import numpy as np

from .chains import (Trajectory, ar1, choose_small_set, estimate_beta,
                     hitting_count, random_walk, renewal, simulate_chain, tar,
                     unit_root)
from .errors import (ConfigurationError, DataError, ParseError, RUNTIME_ERRORS,
                     USER_ERRORS)
from .estimation import (OptimizerConfig, critical_value, lmnls_fit, lnls_fit,
                         log_squared_series, mnls_fit, nls_fit,
                         truncation_level)
from .inference import covariance_ah, covariance_integrable
from .interval import Interval
from .models import (Dataset, GAUSSIAN_CALIBRATION, HOMOGENEOUS, INTEGRABLE,
                     NoiseSpec, VolatilityModel, builtin_model,
                     builtin_volatility)
from .montecarlo import StudyConfig, run_study
from .nonparametric import (KernelRegConfig, calibrate_polynomial,
                            cv_bandwidth, kernel_regression)

_CHAIN_CHOICES = ("ar1", "random_walk", "tar", "renewal", "unit_root")
_LOSSES = ("nls", "mnls", "lnls", "lmnls")


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; bad flags are a user error
    def error(self, message):
        raise ParseError(message)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _echo(pairs):
    for key, value in pairs:
        print(f"{key} = {_fmt(value)}", file=sys.stderr)


@contextlib.contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _resolve_seed(seed) -> int:
    if seed is not None:
        return int(seed)
    return int(np.random.SeedSequence().entropy % 2**63)


# ---------------------------------------------------------------- series csv

def read_series_csv(path):
    """Parse a series file with header `t,x` (path) or `t,x,y` (regression).

    Returns a Trajectory for two columns and a Dataset for three. The time
    index must be strictly increasing integers. Files carry no separate
    initial-state row: the first observation doubles as the starting state
    for hitting-count conventions.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if any(c.strip() for c in row)]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [c.strip().lower() for c in rows[0]]
    if header == ["t", "x"]:
        width = 2
    elif header == ["t", "x", "y"]:
        width = 3
    else:
        raise ParseError(f"{path}: expected header t,x or t,x,y")
    if len(rows) == 1:
        raise ParseError(f"{path}: no data rows")
    t_prev = None
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(f"{path}, line {lineno}: expected {width} fields")
        try:
            t = int(row[0].strip())
            vals = [float(c) for c in row[1:]]
        except ValueError:
            raise ParseError(f"{path}, line {lineno}: malformed row") from None
        if not all(np.isfinite(v) for v in vals):
            raise ParseError(f"{path}, line {lineno}: non-finite value")
        if t_prev is not None and t <= t_prev:
            raise DataError(f"{path}, line {lineno}: time index must increase")
        t_prev = t
        xs.append(vals[0])
        if width == 3:
            ys.append(vals[1])
    if width == 2:
        return Trajectory(values=np.asarray(xs))
    return Dataset(x=np.asarray(xs), y=np.asarray(ys), meta={"source": str(path)})


def write_series_csv(out, values, y=None, t_start: int = 0):
    """Write `t,x` (or `t,x,y`) rows; floats are round-trip formatted."""
    values = np.asarray(values, dtype=float)
    if y is None:
        out.write("t,x\n")
        for t, v in enumerate(values, start=t_start):
            out.write(f"{t},{_fmt(v)}\n")
    else:
        y = np.asarray(y, dtype=float)
        out.write("t,x,y\n")
        for t, (v, w) in enumerate(zip(values, y), start=t_start):
            out.write(f"{t},{_fmt(v)},{_fmt(w)}\n")


def _pilot_trajectory(data: Dataset) -> Trajectory:
    # regression files carry no X_0; the first point doubles as initial state
    return Trajectory(values=np.concatenate([data.x[:1], data.x]))


# ------------------------------------------------------------------ simulate

def _require(args, name, family, present: bool):
    value = getattr(args, name)
    flag = "--" + name.replace("_", "-")
    if present and value is None:
        raise ConfigurationError(f"{family} requires {flag}")
    if not present and value is not None:
        raise ConfigurationError(f"{family} does not take {flag}")
    return value


def _build_chain(args):
    family = args.chain
    sd = args.sd if args.sd is not None else 1.0
    x0 = args.initial
    if family == "ar1":
        phi = _require(args, "phi", family, True)
        return ar1(phi, innovation_sd=sd, initial_state=x0)
    if family == "random_walk":
        _require(args, "phi", family, False)
        return random_walk(innovation_sd=sd, initial_state=x0)
    if family == "tar":
        phi = _require(args, "phi", family, True)
        lo, hi = args.threshold
        return tar(phi, threshold=Interval(lo, hi), innovation_sd=sd,
                   initial_state=x0)
    if family == "renewal":
        if args.sd is not None:
            raise ConfigurationError("renewal does not take --sd")
        exponent = _require(args, "exponent", family, True)
        return renewal(exponent, initial_state=x0)
    weights = args.ma_weights if args.ma_weights is not None else [1.0]
    return unit_root(ma_weights=weights, innovation_ar=args.innovation_ar,
                     innovation_sd=sd, initial_state=x0)


def _cmd_simulate(args) -> int:
    spec = _build_chain(args)
    seed = _resolve_seed(args.seed)
    _echo([("chain", spec.describe()), ("n", args.n), ("seed", seed)])
    traj = simulate_chain(spec, args.n, seed)
    with _open_out(args.out) as out:
        write_series_csv(out, traj.values)
    return 0


# ----------------------------------------------------------------------- fit

def _parse_bounds(text: str, dim: int):
    pairs = []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            pairs.append((float(lo), float(hi)))
        except ValueError:
            raise ConfigurationError(
                f"bad bounds {text!r}; expected lo:hi[,lo:hi...]") from None
    if len(pairs) != dim:
        raise ConfigurationError(f"expected {dim} bound pairs, got {len(pairs)}")
    return pairs


def _resolve_calibration(text):
    if text is None:
        return None
    if text == "gaussian":
        return GAUSSIAN_CALIBRATION
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(
            f"bad calibration {text!r}; expected a number or 'gaussian'") from None


def _fit_beta_plan(args, data):
    """Resolve the recurrence exponent and the truncation plan for a
    truncated loss; the exponent falls back to the hitting-count estimate."""
    beta = args.beta
    if beta is None:
        beta = estimate_beta(_pilot_trajectory(data))
        _echo([("beta_hat", beta)])
    plan = truncation_level(data.n, beta, args.alpha)
    _echo([("radius", plan.radius)])
    return beta, plan


def _cmd_fit(args) -> int:
    data = read_series_csv(args.data)
    if isinstance(data, Trajectory):
        raise DataError("fit needs a t,x,y file; got a two-column series")
    vol_loss = args.loss in ("lnls", "lmnls")
    calibration = _resolve_calibration(args.calibration)
    if vol_loss:
        model = builtin_volatility(args.model, calibration)
    else:
        model = builtin_model(args.model)
        if calibration is not None:
            raise ConfigurationError("--calibration only applies to lnls/lmnls")
    if args.theta_bounds is not None:
        import dataclasses
        model = dataclasses.replace(
            model, bounds=_parse_bounds(args.theta_bounds, model.dim))
    _echo([("data", args.data), ("model", args.model), ("loss", args.loss),
           ("alpha", args.alpha)])

    beta = plan = None
    if args.loss == "nls":
        result = nls_fit(data, model)
    elif args.loss == "mnls":
        beta, plan = _fit_beta_plan(args, data)
        result = mnls_fit(data, model, plan)
    elif args.loss == "lnls":
        result = lnls_fit(data, model)
    else:
        beta, plan = _fit_beta_plan(args, data)
        result = lmnls_fit(data, model, plan)

    cov = None
    if args.ci is not None:
        cov = _fit_covariance(args, data, model, result, plan)

    report = [("estimator", result.estimator), ("model", result.model_name),
              ("n", data.n), ("n_effective", result.n_effective),
              ("converged", result.converged),
              ("iterations", result.iterations),
              ("loss_value", result.loss_value),
              ("sigma2_hat", result.sigma2_hat)]
    if beta is not None:
        report += [("beta", beta), ("radius", plan.radius)]
    if result.calibration_hat is not None:
        report += [("calibration_hat", result.calibration_hat)]
    for j, v in enumerate(result.theta_hat):
        report.append((f"theta_{j}", v))
    if cov is not None:
        for j in range(len(result.theta_hat)):
            se = float(np.sqrt(cov.matrix[j, j] / cov.rate_factor))
            report += [(f"se_{j}", se), (f"ci_lo_{j}", cov.ci[j, 0]),
                       (f"ci_hi_{j}", cov.ci[j, 1])]
    if result.flags:
        report.append(("flags", ";".join(result.flags)))
    if cov is not None and cov.flags:
        report.append(("covariance_flags", ";".join(cov.flags)))
    _echo(report)

    with _open_out(args.out) as out:
        keys = [k for k, _ in report]
        out.write(",".join(keys) + "\n")
        out.write(",".join(_fmt(v) for _, v in report) + "\n")
        if cov is not None:
            out.write("\n")
            for row in cov.matrix:
                out.write(",".join(_fmt(v) for v in row) + "\n")
    return 0


def _fit_covariance(args, data, model, result, plan):
    level = args.ci
    if not 0.0 < level < 1.0:
        raise ConfigurationError("--ci level must be in (0, 1)")
    if args.set is not None:
        small_set = Interval(args.set[0], args.set[1])
    else:
        small_set = choose_small_set(_pilot_trajectory(data))
    _echo([("small_set", small_set)])
    if isinstance(model, VolatilityModel):
        calib = (model.calibration if model.calibration is not None
                 else result.calibration_hat)
        infer_model = model.log_mean_model(calib)
        infer_data = Dataset(x=data.x, y=log_squared_series(data),
                             meta=dict(data.meta))
    else:
        infer_model = model
        infer_data = data
    kind = infer_model.klass.kind
    if kind == INTEGRABLE:
        return covariance_integrable(infer_data, infer_model, result.theta_hat,
                                     small_set, ci_level=level)
    if kind == HOMOGENEOUS:
        if plan is None:
            raise ConfigurationError(
                "intervals for an asymptotically homogeneous model need a "
                "truncated loss (mnls or lmnls)")
        return covariance_ah(infer_data, infer_model, result.theta_hat, plan,
                             small_set, ci_level=level)
    raise ConfigurationError(f"no interval rule for function class {kind!r}")


# ---------------------------------------------------------------------- beta

def _cmd_beta(args) -> int:
    parsed = read_series_csv(args.data)
    traj = parsed if isinstance(parsed, Trajectory) else _pilot_trajectory(parsed)
    if args.set is not None:
        small_set = Interval(args.set[0], args.set[1])
    else:
        small_set = choose_small_set(traj)
    hits = hitting_count(traj, small_set)
    beta_hat = estimate_beta(traj, small_set)
    _echo([("data", args.data), ("small_set", small_set), ("n", traj.n),
           ("hits", hits), ("beta_hat", beta_hat)])
    with _open_out(args.out) as out:
        out.write("n,hits,beta_hat,set_lo,set_hi\n")
        row = [traj.n, hits, beta_hat, small_set.lo, small_set.hi]
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return 0


# ------------------------------------------------------------------------ mc

def _parse_config_file(path) -> dict:
    pairs = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}, line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ParseError(f"{path}, line {lineno}: expected key = value")
            if key in pairs:
                raise ParseError(f"{path}, line {lineno}: duplicate key {key!r}")
            pairs[key] = value
    if not pairs:
        raise ParseError(f"{path}: empty config")
    return pairs


class _Config:
    """Flat key=value study configuration with consumption tracking, so that
    misspelled keys are reported instead of silently ignored."""

    def __init__(self, pairs: dict):
        self.pairs = dict(pairs)
        self.used = set()

    def get(self, key, default=None, required=False):
        if key in self.pairs:
            self.used.add(key)
            return self.pairs[key]
        if required:
            raise ConfigurationError(f"config is missing required key {key!r}")
        return default

    def get_float(self, key, default=None, required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigurationError(f"config key {key!r}: bad number {raw!r}") from None

    def get_int(self, key, default=None, required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"config key {key!r}: bad integer {raw!r}") from None

    def get_floats(self, key, required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return None
        try:
            return tuple(float(v) for v in raw.split())
        except ValueError:
            raise ConfigurationError(f"config key {key!r}: bad number list {raw!r}") from None

    def leftovers(self):
        return sorted(set(self.pairs) - self.used)


def _config_chain(cfg: _Config):
    family = cfg.get("chain", required=True)
    sd = cfg.get_float("chain.sd", 1.0)
    x0 = cfg.get_float("chain.initial", 0.0)
    if family == "ar1":
        return ar1(cfg.get_float("chain.phi", required=True), sd, x0)
    if family == "random_walk":
        return random_walk(sd, x0)
    if family == "tar":
        thr = cfg.get_floats("chain.threshold") or (-1.0, 1.0)
        if len(thr) != 2:
            raise ConfigurationError("chain.threshold needs two numbers")
        return tar(cfg.get_float("chain.phi", required=True),
                   Interval(thr[0], thr[1]), sd, x0)
    if family == "renewal":
        return renewal(cfg.get_float("chain.exponent", required=True), x0)
    if family == "unit_root":
        weights = cfg.get_floats("chain.ma_weights") or (1.0,)
        return unit_root(weights, cfg.get_float("chain.ar", 0.0), sd, x0)
    raise ConfigurationError(
        f"unknown chain family {family!r}; expected one of {', '.join(_CHAIN_CHOICES)}")


def _config_study(pairs: dict) -> StudyConfig:
    cfg = _Config(pairs)
    chain = _config_chain(cfg)
    model_name = cfg.get("model", required=True)
    estimators = tuple(cfg.get("estimators", required=True).split())
    calibration = _resolve_calibration(cfg.get("calibration"))
    vol = any(e in ("lnls", "lmnls") for e in estimators)
    if vol:
        model = builtin_volatility(model_name, calibration)
        if "lnls" in estimators and calibration is None:
            raise ConfigurationError(
                "lnls needs a known calibration; set calibration = gaussian "
                "or a number")
        noise = None
    else:
        model = builtin_model(model_name)
        if calibration is not None:
            raise ConfigurationError("calibration only applies to lnls/lmnls")
        noise = NoiseSpec(sd=cfg.get_float("noise_sd", 1.0))
    theta0 = cfg.get_floats("theta0", required=True)
    sizes = cfg.get("sizes", required=True)
    try:
        sizes = tuple(int(v) for v in sizes.split())
    except ValueError:
        raise ConfigurationError(f"bad sizes {sizes!r}") from None
    study = StudyConfig(
        chain=chain, model=model, theta0=theta0, sample_sizes=sizes,
        noise=noise, estimators=estimators,
        replications=cfg.get_int("reps", 500),
        alpha=cfg.get_float("alpha", 0.01),
        beta=cfg.get_float("beta"),
        base_seed=cfg.get_int("seed", 0),
        vol_noise=cfg.get("vol_noise", "gaussian"))
    extra = cfg.leftovers()
    if extra:
        raise ConfigurationError(f"unknown config keys: {', '.join(extra)}")
    return study


def _cmd_mc(args) -> int:
    pairs = _parse_config_file(args.config)
    study = _config_study(pairs)
    _echo(sorted(pairs.items()))
    _echo([("threads", args.threads), ("out_dir", args.out_dir)])
    summary = run_study(study, threads=args.threads)
    os.makedirs(args.out_dir, exist_ok=True)
    table_path = os.path.join(args.out_dir, "table.csv")
    ratios_path = os.path.join(args.out_dir, "ratios.csv")
    with open(table_path, "w") as fh:
        fh.write(summary.table_csv())
    with open(ratios_path, "w") as fh:
        fh.write(summary.ratios_csv())
    for (est, n), cell in sorted(summary.cells.items()):
        if cell.failures:
            print(f"cell ({est}, n={n}): {cell.failures} failed replications",
                  file=sys.stderr)
    print(f"wrote {table_path}", file=sys.stderr)
    print(f"wrote {ratios_path}", file=sys.stderr)
    return 0


# ------------------------------------------------------------------ calibrate

def _cmd_calibrate(args) -> int:
    data = read_series_csv(args.data)
    if isinstance(data, Trajectory):
        raise DataError("calibrate needs a t,x,y file; got a two-column series")
    if args.bandwidth is not None:
        h = args.bandwidth
    else:
        h = cv_bandwidth(data)
    _echo([("data", args.data), ("degree", args.degree), ("bandwidth", h)])
    beta = args.beta
    if beta is None:
        beta = estimate_beta(_pilot_trajectory(data))
        _echo([("beta_hat", beta)])
    plan = truncation_level(data.n, beta, args.alpha)
    result = calibrate_polynomial(data, args.degree, plan)
    report = [("radius", plan.radius), ("n_effective", result.n_effective),
              ("converged", result.converged)]
    for j, v in enumerate(result.theta_hat):
        report.append((f"coef_{j}", v))
    _echo(report)
    grid = np.linspace(float(data.x.min()), float(data.x.max()),
                       args.curve_points)
    curve = kernel_regression(grid, data, KernelRegConfig(bandwidth=h))
    with _open_out(args.out) as out:
        out.write("x,m_hat\n")
        for xv, mv in zip(grid, curve):
            out.write(f"{_fmt(xv)},{_fmt(mv)}\n")
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="harrisnls",
                     description="Nonlinear regression with recurrent Markov "
                                 "chain regressors: simulation, estimation, "
                                 "and replication studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a chain to a t,x CSV")
    sim.add_argument("--chain", required=True, choices=_CHAIN_CHOICES,
                     help="chain family")
    sim.add_argument("--n", required=True, type=int, help="number of steps")
    sim.add_argument("--seed", type=int, help="RNG seed (drawn if omitted)")
    sim.add_argument("--phi", type=float,
                     help="AR coefficient (ar1) or inner coefficient (tar)")
    sim.add_argument("--threshold", nargs=2, type=float, default=[-1.0, 1.0],
                     metavar=("LO", "HI"), help="tar regime interval")
    sim.add_argument("--exponent", type=float,
                     help="renewal restart tail exponent in (0, 1)")
    sim.add_argument("--ma-weights", nargs="+", type=float,
                     help="unit_root moving-average weights")
    sim.add_argument("--innovation-ar", type=float, default=0.0,
                     help="unit_root innovation AR coefficient")
    sim.add_argument("--sd", type=float, help="innovation scale (default 1)")
    sim.add_argument("--initial", type=float, default=0.0,
                     help="initial state (default 0)")
    sim.add_argument("--out", help="output CSV path (default stdout)")

    fit = sub.add_parser("fit", help="fit a response model to a t,x,y CSV")
    fit.add_argument("--data", required=True, help="input CSV with header t,x,y")
    fit.add_argument("--model", required=True,
                     help="model name (exp_quadratic, linear, quadratic, "
                          "cubic_poly, poly:<degree>; exp_linear for "
                          "lnls/lmnls)")
    fit.add_argument("--loss", default="nls", choices=_LOSSES,
                     help="loss family (default nls)")
    fit.add_argument("--alpha", type=float, default=0.01,
                     help="truncation tail level (default 0.01)")
    fit.add_argument("--beta", type=float,
                     help="recurrence exponent (estimated if omitted)")
    fit.add_argument("--theta-bounds",
                     help="parameter box override, lo:hi[,lo:hi...]")
    fit.add_argument("--calibration",
                     help="log-noise calibration constant for lnls/lmnls: a "
                          "number or 'gaussian' (lmnls profiles it if omitted)")
    fit.add_argument("--ci", type=float,
                     help="attach confidence intervals at this level")
    fit.add_argument("--set", nargs=2, type=float, metavar=("LO", "HI"),
                     help="reference interval for interval plug-ins "
                          "(chosen from the data if omitted)")
    fit.add_argument("--out", help="output CSV path (default stdout)")

    beta = sub.add_parser("beta", help="estimate the recurrence exponent")
    beta.add_argument("--data", required=True, help="input CSV (t,x or t,x,y)")
    beta.add_argument("--set", nargs=2, type=float, metavar=("LO", "HI"),
                      help="reference interval (chosen from the data if omitted)")
    beta.add_argument("--out", help="output CSV path (default stdout)")

    mc = sub.add_parser("mc", help="run a replication study from a config")
    mc.add_argument("--config", required=True,
                    help="key = value study config file")
    mc.add_argument("--out-dir", default=".",
                    help="directory for table.csv and ratios.csv (default .)")
    mc.add_argument("--threads", type=int, default=1,
                    help="replication pool size (default 1)")

    cal = sub.add_parser("calibrate",
                         help="kernel-regression curve plus truncated "
                              "polynomial fit")
    cal.add_argument("--data", required=True, help="input CSV with header t,x,y")
    cal.add_argument("--degree", required=True, type=int,
                     help="polynomial degree (>= 1)")
    cal.add_argument("--alpha", type=float, default=0.01,
                     help="truncation tail level (default 0.01)")
    cal.add_argument("--beta", type=float,
                     help="recurrence exponent (estimated if omitted)")
    cal.add_argument("--bandwidth", type=float,
                     help="kernel bandwidth (cross-validated if omitted)")
    cal.add_argument("--curve-points", type=int, default=100,
                     help="evaluation points for the fitted curve (default 100)")
    cal.add_argument("--out", help="output CSV path (default stdout)")

    return parser


_DISPATCH = {"simulate": _cmd_simulate, "fit": _cmd_fit, "beta": _cmd_beta,
             "mc": _cmd_mc, "calibrate": _cmd_calibrate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
