"""Least-squares estimators over compact parameter boxes.

Four losses share one optimizer:

- plain sum of squared residuals on (X_t, Y_t);
- the same loss restricted to |X_t| <= M_n, where the truncation radius M_n
  grows with the sample at a rate set by the recurrence exponent, so sparsely
  visited outer regions cannot dominate the fit;
- both of the above applied to ln Y_t^2 for volatility-scale models.

The optimizer is deliberately plain: a coarse grid scan over the box picks a
basin, then damped Gauss-Newton steps (Levenberg-Marquardt) with projection
onto the box polish it. Fits report the loss, the convergence verdict, the
residual variance, and recurrence diagnostics of the regressor series.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .chains import RecurrenceDiagnostics, Trajectory, recurrence_diagnostics
from .errors import (ConfigurationError, DataError, DomainError,
                     EstimationError)
from .models import Dataset, RegressionModel, VolatilityModel

_SQRT2 = math.sqrt(2.0)
_DAMPING_MIN = 1e-12
_DAMPING_MAX = 1e12


def normal_cdf(x):
    """Standard normal distribution function, accurate to ~1e-15 relative."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def critical_value(alpha: float) -> float:
    """The c >= 0 with 2(1 - Phi(c)) = alpha, by bracketed root finding.

    This is the two-sided standard normal critical value; with the reflection
    principle it also bounds the running maximum of a Brownian path, which is
    what makes it the right scale constant for truncation radii.
    """
    if alpha == 1.0:
        warnings.warn("alpha = 1 gives the degenerate critical value 0", stacklevel=2)
        return 0.0
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")

    def f(c):
        return 2.0 * (1.0 - float(normal_cdf(c))) - alpha

    hi = 1.0
    while f(hi) > 0.0:
        hi *= 2.0
    return float(brentq(f, 0.0, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200))


@dataclass(frozen=True)
class TruncationPlan:
    """Truncation radius M_n = critical_value(alpha) * n^(1 - beta)."""

    n: int
    alpha: float
    beta: float
    critical: float
    radius: float


def truncation_level(n: int, beta: float, alpha: float = 0.01) -> TruncationPlan:
    """Build the data-retention plan |X_t| <= M_n for a sample of size n.

    beta is the recurrence exponent of the regressor chain (1 for a
    stationary-regime chain, 1/2 for a random-walk-type chain); smaller beta
    means wilder excursions and hence a wider radius.
    """
    if int(n) != n or n < 2:
        raise DomainError("n must be an integer >= 2")
    if not 0.0 < beta <= 1.0:
        raise DomainError("beta must lie in (0, 1]")
    crit = critical_value(alpha)
    return TruncationPlan(n=int(n), alpha=float(alpha), beta=float(beta),
                          critical=crit, radius=crit * float(n) ** (1.0 - beta))


@dataclass(frozen=True)
class OptimizerConfig:
    grid_points_per_dim: int = 25
    max_refine_iterations: int = 200
    gradient_tolerance: float = 1e-10
    damping_init: float = 1e-3

    def __post_init__(self):
        if self.grid_points_per_dim < 1:
            raise ConfigurationError("grid_points_per_dim must be >= 1")
        if self.max_refine_iterations < 0:
            raise ConfigurationError("max_refine_iterations must be >= 0")


@dataclass(frozen=True, eq=False)
class EstimateResult:
    theta_hat: np.ndarray
    loss_value: float
    converged: bool
    iterations: int
    sigma2_hat: float
    n_effective: int
    estimator: str
    model_name: str
    trace: tuple = ()
    flags: tuple = ()
    diagnostics: RecurrenceDiagnostics | None = None
    plan: TruncationPlan | None = None
    calibration_hat: float | None = None


class _LeastSquares:
    """Sum of squared residuals z - g(x, theta) on pre-masked arrays."""

    def __init__(self, x, z, model):
        self.x = x
        self.z = z
        self.model = model

    def loss(self, theta):
        r = self.z - self.model.g(self.x, theta)
        return float(r @ r)

    def linearize(self, theta):
        r = self.z - self.model.g(self.x, theta)
        jac = np.asarray(self.model.grad(self.x, theta), dtype=float)
        return float(r @ r), jac.T @ r, jac.T @ jac


class _ProfiledLeastSquares:
    """Concentrated loss for the joint (gamma, calibration) volatility fit.

    For fixed gamma the optimal log-calibration is the mean of
    z - ln sigma2(x, gamma), so the intercept is profiled out and the
    optimizer sees centered residuals only; the envelope theorem makes the
    centered gradient exact.
    """

    def __init__(self, x, z, base_model):
        self.x = x
        self.z = z
        self.base = base_model  # log-mean model at calibration 1

    def _residuals(self, gamma):
        s = self.z - self.base.g(self.x, gamma)
        return s - s.mean()

    def loss(self, gamma):
        r = self._residuals(gamma)
        return float(r @ r)

    def linearize(self, gamma):
        r = self._residuals(gamma)
        jac = np.asarray(self.base.grad(self.x, gamma), dtype=float)
        jac = jac - jac.mean(axis=0, keepdims=True)
        return float(r @ r), jac.T @ r, jac.T @ jac

    def log_calibration(self, gamma):
        return float(np.mean(self.z - self.base.g(self.x, gamma)))


def _projected_gradient(grad, theta, lo, hi):
    pg = grad.copy()
    at_lo = theta <= lo
    at_hi = theta >= hi
    pg[at_lo] = np.minimum(pg[at_lo], 0.0)
    pg[at_hi] = np.maximum(pg[at_hi], 0.0)
    return pg


def _grid_start(problem, bounds, k):
    axes = [np.linspace(lo, hi, k) for lo, hi in bounds]
    best_theta = None
    best_loss = np.inf
    worst_loss = -np.inf
    count = 0
    for point in itertools.product(*axes):
        count += 1
        theta = np.array(point)
        val = problem.loss(theta)
        if not np.isfinite(val):
            continue
        worst_loss = max(worst_loss, val)
        if val < best_loss:  # first minimum wins: lexicographically smallest
            best_loss = val
            best_theta = theta
    if best_theta is None:
        raise EstimationError("loss is non-finite over the whole grid")
    tie = count > 1 and worst_loss == best_loss
    return best_theta, best_loss, tie


def _minimize_box(problem, bounds, cfg: OptimizerConfig, start=None):
    lo, hi = bounds[:, 0], bounds[:, 1]
    flags = []
    if start is None:
        theta, loss, tie = _grid_start(problem, bounds, cfg.grid_points_per_dim)
        if tie:
            flags.append("grid-tie")
    else:
        theta = np.clip(np.asarray(start, dtype=float).reshape(-1), lo, hi)
        loss = problem.loss(theta)
    trace = [loss]
    lam = cfg.damping_init
    tol = cfg.gradient_tolerance
    iterations = 0
    converged = False
    for _ in range(cfg.max_refine_iterations):
        loss, b, gram = problem.linearize(theta)
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(gram))):
            raise EstimationError("non-finite normal equations")
        pg = _projected_gradient(-2.0 * b, theta, lo, hi)
        if np.linalg.norm(pg) <= tol * (1.0 + abs(loss)):
            converged = True
            break
        diag = np.diag(gram).copy()
        fallback = max(diag.max(), 1.0)
        diag[diag <= 0.0] = fallback
        accepted = False
        solver_failed = True
        while lam <= _DAMPING_MAX:
            try:
                delta = np.linalg.solve(gram + lam * np.diag(diag), b)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            solver_failed = False
            cand = np.clip(theta + delta, lo, hi)
            cand_loss = problem.loss(cand)
            improved = np.isfinite(cand_loss) and cand_loss < loss
            if np.isfinite(cand_loss) and cand_loss == loss:
                # sub-ulp progress: resolve the tie by the optimality measure
                _, cand_b, _ = problem.linearize(cand)
                cand_pg = _projected_gradient(-2.0 * cand_b, cand, lo, hi)
                improved = np.linalg.norm(cand_pg) < np.linalg.norm(pg)
            if improved:
                theta, loss = cand, cand_loss
                trace.append(cand_loss)
                lam = max(lam / 10.0, _DAMPING_MIN)
                accepted = True
                break
            lam *= 10.0
        iterations += 1
        if not accepted:
            if solver_failed:
                raise EstimationError("rank-deficient design")
            break  # no descent direction left; the final KKT check decides
        lam = max(lam, _DAMPING_MIN)
    if not converged:
        _, b, _ = problem.linearize(theta)
        pg = _projected_gradient(-2.0 * b, theta, lo, hi)
        converged = bool(np.linalg.norm(pg) <= tol * (1.0 + abs(loss)))
    return theta, loss, converged, iterations, tuple(trace), flags


def _check_series(data: Dataset):
    if not (np.all(np.isfinite(data.x)) and np.all(np.isfinite(data.y))):
        raise DataError("non-finite values in the regression series")


def _pilot_diagnostics(x: np.ndarray) -> RecurrenceDiagnostics | None:
    # hitting conventions treat the first regression point as the initial state
    if x.shape[0] <= 1:
        return None
    traj = Trajectory(values=np.concatenate((x[:1], x)))
    try:
        return recurrence_diagnostics(traj)
    except (DomainError, EstimationError):
        return None


def log_squared_series(data: Dataset, zero_floor: bool = False) -> np.ndarray:
    """ln Y_t^2, the response the log-scale fits regress on."""
    if data.log_y2 is not None:
        return data.log_y2
    y2 = data.y * data.y
    if np.any(y2 == 0.0):
        if not zero_floor:
            raise DataError(
                "ln Y^2 undefined at Y = 0; pass zero_floor=True to clamp at 1e-300"
            )
        y2 = np.maximum(y2, 1e-300)
    return np.log(y2)


def nls_fit(data: Dataset, model: RegressionModel,
            cfg: OptimizerConfig | None = None, start=None) -> EstimateResult:
    """Plain least squares over the model's parameter box.

    sigma2_hat is the mean squared residual at theta_hat (divisor n).
    """
    cfg = cfg or OptimizerConfig()
    _check_series(data)
    if data.n < model.dim + 1:
        raise DataError(f"need at least {model.dim + 1} observations")
    problem = _LeastSquares(data.x, data.y, model)
    theta, loss, converged, iterations, trace, flags = _minimize_box(
        problem, model.bounds, cfg, start)
    if model.uses_fd_grad:
        flags.append("fd-gradient")
    return EstimateResult(theta_hat=theta, loss_value=loss, converged=converged,
                          iterations=iterations, sigma2_hat=loss / data.n,
                          n_effective=data.n, estimator="nls", model_name=model.name,
                          trace=trace, flags=tuple(flags),
                          diagnostics=_pilot_diagnostics(data.x))


def mnls_fit(data: Dataset, model: RegressionModel, plan: TruncationPlan,
             cfg: OptimizerConfig | None = None, start=None) -> EstimateResult:
    """Truncated least squares: only points with |X_t| <= plan.radius enter.

    When the radius already covers the whole sample this reproduces nls_fit
    exactly, bit for bit.
    """
    cfg = cfg or OptimizerConfig()
    _check_series(data)
    if plan.radius < 0:
        raise DomainError("truncation radius must be nonnegative")
    mask = np.abs(data.x) <= plan.radius
    n_eff = int(np.count_nonzero(mask))
    if n_eff < model.dim + 1:
        raise EstimationError(
            f"truncation removed too many points: {n_eff} left inside radius "
            f"{plan.radius:g}"
        )
    problem = _LeastSquares(data.x[mask], data.y[mask], model)
    theta, loss, converged, iterations, trace, flags = _minimize_box(
        problem, model.bounds, cfg, start)
    if model.uses_fd_grad:
        flags.append("fd-gradient")
    return EstimateResult(theta_hat=theta, loss_value=loss, converged=converged,
                          iterations=iterations, sigma2_hat=loss / n_eff,
                          n_effective=n_eff, estimator="mnls", model_name=model.name,
                          trace=trace, flags=tuple(flags),
                          diagnostics=_pilot_diagnostics(data.x), plan=plan)


def lnls_fit(data: Dataset, vol: VolatilityModel,
             cfg: OptimizerConfig | None = None, zero_floor: bool = False,
             start=None) -> EstimateResult:
    """Least squares on ln Y^2 against ln(calibration * sigma2(x, gamma)).

    Requires the calibration constant to be known (set on the model); use
    lmnls_fit for the joint fit when it is not.
    """
    cfg = cfg or OptimizerConfig()
    _check_series(data)
    if vol.calibration is None:
        raise ConfigurationError(
            "log-scale fit needs a known calibration constant; "
            "use lmnls_fit to estimate it jointly"
        )
    if data.n < vol.dim + 1:
        raise DataError(f"need at least {vol.dim + 1} observations")
    z = log_squared_series(data, zero_floor)
    model = vol.log_mean_model(vol.calibration)
    problem = _LeastSquares(data.x, z, model)
    gamma, loss, converged, iterations, trace, flags = _minimize_box(
        problem, vol.bounds, cfg, start)
    return EstimateResult(theta_hat=gamma, loss_value=loss, converged=converged,
                          iterations=iterations, sigma2_hat=loss / data.n,
                          n_effective=data.n, estimator="lnls", model_name=vol.name,
                          trace=trace, flags=tuple(flags),
                          diagnostics=_pilot_diagnostics(data.x))


def lmnls_fit(data: Dataset, vol: VolatilityModel, plan: TruncationPlan,
              cfg: OptimizerConfig | None = None, zero_floor: bool = False,
              start=None) -> EstimateResult:
    """Truncated log-scale fit; profiles the calibration constant when unknown.

    With an unknown calibration the optimal intercept at each gamma is the
    retained-sample mean of ln Y^2 - ln sigma2(X, gamma); the fit minimizes
    the concentrated loss and reports exp of that mean as calibration_hat.
    """
    cfg = cfg or OptimizerConfig()
    _check_series(data)
    if plan.radius < 0:
        raise DomainError("truncation radius must be nonnegative")
    mask = np.abs(data.x) <= plan.radius
    n_eff = int(np.count_nonzero(mask))
    joint = vol.calibration is None
    if n_eff < vol.dim + 1 + (1 if joint else 0):
        raise EstimationError(
            f"truncation removed too many points: {n_eff} left inside radius "
            f"{plan.radius:g}"
        )
    z = log_squared_series(data, zero_floor)[mask]
    x = data.x[mask]
    calibration_hat = None
    if joint:
        problem = _ProfiledLeastSquares(x, z, vol.log_mean_model(1.0))
        gamma, loss, converged, iterations, trace, flags = _minimize_box(
            problem, vol.bounds, cfg, start)
        calibration_hat = float(np.exp(problem.log_calibration(gamma)))
        flags.append("calibration-profiled")
    else:
        problem = _LeastSquares(x, z, vol.log_mean_model(vol.calibration))
        gamma, loss, converged, iterations, trace, flags = _minimize_box(
            problem, vol.bounds, cfg, start)
    return EstimateResult(theta_hat=gamma, loss_value=loss, converged=converged,
                          iterations=iterations, sigma2_hat=loss / n_eff,
                          n_effective=n_eff, estimator="lmnls", model_name=vol.name,
                          trace=trace, flags=tuple(flags),
                          diagnostics=_pilot_diagnostics(data.x), plan=plan,
                          calibration_hat=calibration_hat)
