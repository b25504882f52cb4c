"""Plug-in covariance matrices and confidence intervals.

Everything here is built from observable quantities. The random norming that
theory attaches to estimators on recurrent chains (the number of returns to a
small set) is replaced by its sample value, and invariant-measure ratios are
replaced by occupation-count ratios, so a confidence interval can be computed
from one realized path without knowing the chain's family.

Two constructions cover the two function classes:

- integrable response: curvature matrix integral of grad g grad g' against a
  kernel density estimate inside the reference set, extended outside it by
  occupation ratios over unit bins;
- asymptotically homogeneous response: the same integral collapses onto the
  gradient's limit shape sampled over unit bins scaled by the truncation
  radius, again weighted by occupation ratios.

A third, deterministic matrix serves unit-root regressors, where the limit
integral runs over the rescaled range [-1, 1].
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (ConfigurationError, DataError, DomainError,
                     InferenceError, NumericError)
from .estimation import TruncationPlan, critical_value
from .interval import Interval
from .models import HOMOGENEOUS, Dataset, RegressionModel

_PSD_FLOOR = 1e-10
_QUAD_TOL = 1e-10
_MAX_DEPTH = 48


def adaptive_simpson(f, a: float, b: float, tol: float = _QUAD_TOL) -> float:
    """Adaptive Simpson quadrature with an absolute error target."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a0, b0, fa0, fm0, fb0, s0, tol0, depth = stack.pop()
        m = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m), 0.5 * (m + b0)
        flm, frm = f(lm), f(rm)
        left = (m - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        right = (b0 - m) / 6.0 * (fm0 + 4.0 * frm + fb0)
        err = left + right - s0
        if abs(err) <= 15.0 * tol0:
            total += left + right + err / 15.0
        elif depth >= _MAX_DEPTH:
            raise NumericError("quadrature non-convergence")
        else:
            stack.append((a0, m, fa0, flm, fm0, left, 0.5 * tol0, depth + 1))
            stack.append((m, b0, fm0, frm, fb0, right, 0.5 * tol0, depth + 1))
    return total


def silverman_bandwidth(sample: np.ndarray) -> float:
    """0.9 min(sd, IQR/1.34) m^(-1/5); needs a non-degenerate sample."""
    sample = np.asarray(sample, dtype=float)
    m = sample.shape[0]
    if m < 2:
        raise DomainError("bandwidth rule needs at least two points")
    sd = float(np.std(sample))
    q75, q25 = np.percentile(sample, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0:
        raise DomainError("degenerate sample: zero spread")
    return 0.9 * spread * m ** (-0.2)


@dataclass(frozen=True)
class KdeConfig:
    bandwidth: float | None = None  # None picks the Silverman rule

    def __post_init__(self):
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive")


def kernel_density(x, sample, cfg: KdeConfig | None = None):
    """Gaussian kernel density estimate of the sample, evaluated at x."""
    cfg = cfg or KdeConfig()
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 1 or sample.shape[0] < 1:
        raise DataError("kde needs a nonempty 1-D sample")
    h = cfg.bandwidth if cfg.bandwidth is not None else silverman_bandwidth(sample)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    u = (x_arr[:, None] - sample[None, :]) / h
    dens = np.exp(-0.5 * u * u).sum(axis=1) / (sample.shape[0] * h * math.sqrt(2.0 * math.pi))
    return dens if np.ndim(x) else float(dens[0])


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    """Covariance matrix of an estimator, with its norming and intervals.

    The estimator's variance is matrix / rate_factor; `ci` stacks the
    per-coordinate intervals theta_j -/+ z sqrt(matrix_jj / rate_factor).
    """

    kind: str
    matrix: np.ndarray
    rate_factor: float
    ci_level: float
    ci: np.ndarray
    flags: tuple = ()


def _symmetrize_check(matrix: np.ndarray, what: str) -> np.ndarray:
    matrix = 0.5 * (matrix + matrix.T)
    floor = -_PSD_FLOOR * max(1.0, float(np.trace(matrix)))
    if np.linalg.eigvalsh(matrix).min() < floor:
        raise InferenceError(f"{what} is not positive semidefinite")
    return matrix


def _invert(matrix: np.ndarray, what: str) -> np.ndarray:
    try:
        inv = np.linalg.inv(matrix)
    except np.linalg.LinAlgError:
        raise InferenceError(f"non-identified: singular {what}") from None
    if not np.all(np.isfinite(inv)):
        raise InferenceError(f"non-identified: singular {what}")
    return inv


def _package(kind, matrix, rate, theta_hat, ci_level, flags=()):
    matrix = _symmetrize_check(matrix, "covariance")
    z = critical_value(1.0 - ci_level)
    half = z * np.sqrt(np.diag(matrix) / rate)
    ci = np.column_stack((theta_hat - half, theta_hat + half))
    matrix = matrix.copy()
    matrix.flags.writeable = False
    ci.flags.writeable = False
    return CovarianceEstimate(kind=kind, matrix=matrix, rate_factor=float(rate),
                              ci_level=float(ci_level), ci=ci, flags=tuple(flags))


def _row_grad(model, theta):
    def at(x):
        return np.asarray(model.grad(np.array([x]), theta), dtype=float)[0]
    return at


def _outside_unit_bins(x: np.ndarray, small_set: Interval):
    """Unit bins tiling outward from the reference set, with visit counts.

    Yields (lo, hi, count) for bins with at least one visit. The outermost
    bins are full unit bins even where the data range ends mid-bin; the
    integrands this feeds are integrable, so the overspread is harmless.
    """
    out = []
    above = x[x > small_set.hi] - small_set.hi
    if above.size:
        counts = np.bincount(np.floor(above).astype(int))
        for k, c in enumerate(counts):
            if c:
                out.append((small_set.hi + k, small_set.hi + k + 1.0, int(c)))
    below = small_set.lo - x[x < small_set.lo]
    if below.size:
        counts = np.bincount(np.floor(below).astype(int))
        for k, c in enumerate(counts):
            if c:
                out.append((small_set.lo - k - 1.0, small_set.lo - k, int(c)))
    return out


def covariance_integrable(data: Dataset, model: RegressionModel, theta_hat,
                          small_set: Interval, kde_cfg: KdeConfig | None = None,
                          ci_level: float = 0.95, density=None) -> CovarianceEstimate:
    """Plug-in covariance for integrable responses.

    The curvature matrix integrates grad g grad g' at theta_hat against a
    density estimate of the chain's local occupation: a kernel density from
    the points inside the reference set (renormalized over it), extended
    outside by occupation-ratio-weighted unit bins. The returned matrix is
    sigma2_hat times the inverse curvature; divide by rate_factor (the
    hitting count) for the estimator's variance, as the intervals do.

    `density` overrides the in-set density estimate with a callable; meant
    for tests that substitute an exact density.
    """
    theta_hat = np.asarray(theta_hat, dtype=float).reshape(-1)
    if small_set.is_empty or small_set.length == 0.0:
        raise DomainError("reference set must have positive length")
    x, y = data.x, data.y
    inside = small_set.contains(x)
    n_c = int(np.count_nonzero(inside))
    if n_c < model.dim + 1:
        raise InferenceError(
            f"only {n_c} points in the reference set; density estimate is degenerate"
        )
    resid = y - model.g(x, theta_hat)
    sigma2 = float(resid @ resid) / data.n
    if density is None:
        kde_sample = x[inside]
        base = lambda t: kernel_density(t, kde_sample, kde_cfg)
        mass = adaptive_simpson(base, small_set.lo, small_set.hi)
        if not mass > 0:
            raise InferenceError("density estimate has no mass on the reference set")
        p_hat = lambda t: base(t) / mass
    else:
        p_hat = density
    grad_at = _row_grad(model, theta_hat)
    d = model.dim
    bins = _outside_unit_bins(x, small_set)
    curvature = np.zeros((d, d))
    for j in range(d):
        for k in range(j, d):
            inner = adaptive_simpson(
                lambda t: grad_at(t)[j] * grad_at(t)[k] * p_hat(t),
                small_set.lo, small_set.hi)
            outer = 0.0
            for lo, hi, count in bins:
                ratio = count / n_c
                outer += ratio * adaptive_simpson(
                    lambda t: grad_at(t)[j] * grad_at(t)[k], lo, hi)
            curvature[j, k] = curvature[k, j] = inner + outer
    curvature = _symmetrize_check(curvature, "curvature matrix")
    cov = sigma2 * _invert(curvature, "curvature matrix")
    return _package("integrable", cov, n_c, theta_hat, ci_level)


def _signed_bin_counts(x: np.ndarray, radius: float):
    """Visit counts over the unit bins [i, i+1) up to the radius, per sign.

    Bin i on the positive side is [i, i+1) (the last one [floor(M), M]); on
    the negative side it is [-(i+1), -i) (the last one [-M, -floor(M))).
    Zero sits in the first positive bin only.
    """
    m_floor = int(math.floor(radius))
    pos = np.zeros(m_floor + 1)
    neg = np.zeros(m_floor + 1)
    kept = x[np.abs(x) <= radius]
    nonneg = kept[kept >= 0.0]
    if nonneg.size:
        idx = np.minimum(np.floor(nonneg).astype(int), m_floor)
        np.add.at(pos, idx, 1.0)
    negative = kept[kept < 0.0]
    if negative.size:
        # bin i holds [-(i+1), -i); ceil(-x) - 1 lands -i exactly in bin i - 1
        idx = np.clip(np.ceil(-negative).astype(int) - 1, 0, m_floor)
        np.add.at(neg, idx, 1.0)
    return pos, neg


def covariance_ah(data: Dataset, model: RegressionModel, theta_hat,
                  plan: TruncationPlan, small_set: Interval,
                  ci_level: float = 0.95, occupation=None) -> CovarianceEstimate:
    """Plug-in covariance for asymptotically homogeneous responses.

    The design matrix sums limit_grad limit_grad' over the rescaled bin
    anchors i / M_n, weighted by the occupation ratio of each unit bin
    relative to the reference set, and is scaled by order_grad(M_n)^2.
    `occupation` overrides the empirical ratios with a callable
    (lo, hi) -> ratio (used by tests with exact invariant measures).
    """
    if model.klass.kind != HOMOGENEOUS:
        raise ConfigurationError(
            "this construction needs an asymptotically homogeneous model"
        )
    theta_hat = np.asarray(theta_hat, dtype=float).reshape(-1)
    radius = plan.radius
    if not radius > 0:
        raise DomainError("truncation radius must be positive")
    x, y = data.x, data.y
    n_c = int(np.count_nonzero(small_set.contains(x)))
    if n_c == 0:
        raise InferenceError(f"reference set {small_set} never visited")
    mask = np.abs(x) <= radius
    if not np.any(mask):
        raise InferenceError("no observations inside the truncation radius")
    resid = y[mask] - model.g(x[mask], theta_hat)
    sigma2 = float(resid @ resid) / int(np.count_nonzero(mask))

    m_floor = int(math.floor(radius))
    if occupation is None:
        pos_counts, neg_counts = _signed_bin_counts(x, radius)
        pos_ratio = pos_counts / n_c
        neg_ratio = neg_counts / n_c
        if not (pos_counts.sum() + neg_counts.sum()) > 0:
            raise InferenceError("no occupation in any bin")
    else:
        edges = np.arange(m_floor + 2, dtype=float)
        edges[-1] = radius
        pos_ratio = np.array([occupation(edges[i], edges[i + 1])
                              for i in range(m_floor + 1)])
        neg_ratio = np.array([occupation(-edges[i + 1], -edges[i])
                              for i in range(m_floor + 1)])
    grid = np.arange(m_floor + 1, dtype=float) / radius
    h_pos = np.asarray(model.klass.limit_grad(grid, theta_hat), dtype=float)
    h_neg = np.asarray(model.klass.limit_grad(-grid, theta_hat), dtype=float)
    design = (h_pos.T * pos_ratio) @ h_pos + (h_neg.T * neg_ratio) @ h_neg
    design = _symmetrize_check(design, "bin design matrix")
    scale = float(model.klass.order_grad(radius)) ** 2
    cov = sigma2 * _invert(scale * design, "bin design matrix")
    return _package("asymptotically_homogeneous", cov, n_c, theta_hat, ci_level)


def unit_root_information(model: RegressionModel, radius: float,
                          theta=None) -> np.ndarray:
    """Deterministic information scale for unit-root regressors:
    order_grad(M)^2 * M * integral over [-1, 1] of limit_grad limit_grad'.

    A coordinate whose gradient limit vanishes identically leaves a zero
    row and column; the matrix is returned as is with a warning, since
    downstream inversion is then impossible for that coordinate.
    """
    if model.klass.kind != HOMOGENEOUS:
        raise ConfigurationError(
            "unit-root information needs an asymptotically homogeneous model"
        )
    if not radius > 0:
        raise DomainError("radius must be positive")
    if theta is None:
        theta = model.bounds.mean(axis=1)
    theta = np.asarray(theta, dtype=float).reshape(-1)

    def h_at(t):
        return np.asarray(model.klass.limit_grad(np.array([t]), theta), dtype=float)[0]

    d = model.dim
    integral = np.zeros((d, d))
    for j in range(d):
        for k in range(j, d):
            integral[j, k] = integral[k, j] = adaptive_simpson(
                lambda t: h_at(t)[j] * h_at(t)[k], -1.0, 1.0)
    info = float(model.klass.order_grad(radius)) ** 2 * radius * integral
    if np.any(np.diag(info) == 0.0):
        warnings.warn("information matrix is singular: a gradient coordinate "
                      "has a vanishing limit", stacklevel=2)
    return info


def covariance_unit_root(data: Dataset, model: RegressionModel, theta_hat,
                         plan: TruncationPlan, small_set: Interval,
                         ci_level: float = 0.95) -> CovarianceEstimate:
    """Covariance against the deterministic unit-root information matrix.

    The regeneration count this rate needs is not observable for general
    increment structure; it is proxied by the hitting count of the reference
    set divided by the set's length (exact for a driftless random walk, an
    approximation otherwise; flagged as such).
    """
    theta_hat = np.asarray(theta_hat, dtype=float).reshape(-1)
    if small_set.is_empty or small_set.length == 0.0:
        raise DomainError("reference set must have positive length")
    x, y = data.x, data.y
    n_c = int(np.count_nonzero(small_set.contains(x)))
    if n_c == 0:
        raise InferenceError(f"reference set {small_set} never visited")
    mask = np.abs(x) <= plan.radius
    if not np.any(mask):
        raise InferenceError("no observations inside the truncation radius")
    resid = y[mask] - model.g(x[mask], theta_hat)
    sigma2 = float(resid @ resid) / int(np.count_nonzero(mask))
    info = unit_root_information(model, plan.radius, theta_hat)
    cov = sigma2 * _invert(info, "information matrix")
    rate = n_c / small_set.length
    return _package("unit_root", cov, rate, theta_hat, ci_level,
                    flags=("approximate-rate",))
