"""Regression and volatility model families.

A model bundles the response function g(x, theta), its derivatives in theta,
a compact parameter box, and a tag describing how g behaves at large |x|:
either it is integrable against the chain's invariant measure, or it is
asymptotically homogeneous, i.e. g(lambda x, theta) grows like
order(lambda) * limit(x, theta) for large lambda. Estimation works the same
either way; the tag decides which covariance construction applies and at what
rate the estimator concentrates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma

from .chains import Trajectory
from .errors import ConfigurationError, DataError, DomainError
from .rng import derive_seed, gaussians, make_stream

INTEGRABLE = "integrable"
HOMOGENEOUS = "asymptotically_homogeneous"

# exp(E ln e^2) for standard normal e; calibrates the log-squared transform
GAUSSIAN_CALIBRATION = float(np.exp(digamma(0.5) + np.log(2.0)))

# substream tags so a shared integer seed still yields independent streams
_NOISE_TAG = 0x0E15E


@dataclass(frozen=True, eq=False)
class FunctionClass:
    """Large-|x| behaviour of a response function.

    For the homogeneous kind, `order`/`limit` factor the function itself and
    `order_grad`/`limit_grad` factor its theta-gradient; the gradient factors
    are what inference consumes. Polynomial families keep only the leading
    power here, so non-leading gradient coordinates have a zero limit.
    """

    kind: str
    order: object = None
    limit: object = None
    order_grad: object = None
    limit_grad: object = None

    def __post_init__(self):
        if self.kind not in (INTEGRABLE, HOMOGENEOUS):
            raise ConfigurationError(f"unknown function class kind {self.kind!r}")
        if self.kind == HOMOGENEOUS:
            missing = [n for n in ("order", "limit", "order_grad", "limit_grad")
                       if getattr(self, n) is None]
            if missing:
                raise ConfigurationError(
                    "homogeneous class needs " + ", ".join(missing)
                )


def _as_box(bounds, dim: int) -> np.ndarray:
    box = np.asarray(bounds, dtype=float).reshape(dim, 2)
    if np.any(box[:, 0] >= box[:, 1]):
        raise ConfigurationError("parameter box must have lo < hi per coordinate")
    box = box.copy()
    box.flags.writeable = False
    return box


def _fd_grad(g):
    def grad(x, theta):
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.empty((x.shape[0], theta.shape[0]))
        for j in range(theta.shape[0]):
            h = 1e-6 * (1.0 + abs(theta[j]))
            up = theta.copy(); up[j] += h
            dn = theta.copy(); dn[j] -= h
            out[:, j] = (g(x, up) - g(x, dn)) / (2.0 * h)
        return out
    return grad


@dataclass(frozen=True, eq=False)
class RegressionModel:
    name: str
    dim: int
    g: object
    grad: object
    bounds: np.ndarray
    klass: FunctionClass
    hess: object = None
    uses_fd_grad: bool = False

    def __post_init__(self):
        object.__setattr__(self, "bounds", _as_box(self.bounds, self.dim))

    def contains(self, theta, interior: bool = False) -> bool:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            return False
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if interior:
            return bool(np.all(theta > lo) and np.all(theta < hi))
        return bool(np.all(theta >= lo) and np.all(theta <= hi))


def custom_model(name: str, g, bounds, grad=None, hess=None,
                 klass: FunctionClass | None = None) -> RegressionModel:
    """Wrap a user-supplied response function as a model.

    Without an analytic gradient a central finite-difference fallback is
    installed and the fact is flagged on the model (and propagated into fit
    results), since difference gradients cost d extra evaluations per point
    and cap the attainable optimizer precision.
    """
    dim = np.asarray(bounds, dtype=float).reshape(-1, 2).shape[0]
    if klass is None:
        klass = FunctionClass(kind=INTEGRABLE)
    fd = grad is None
    return RegressionModel(name=name, dim=dim, g=g, grad=grad if grad is not None else _fd_grad(g),
                           hess=hess, bounds=bounds, klass=klass, uses_fd_grad=fd)


def polynomial_model(degree: int, bound: float = 200.0) -> RegressionModel:
    """Polynomial response sum_j theta_j x^j with the leading power as the
    homogeneous order. degree >= 1."""
    if int(degree) != degree or degree < 1:
        raise ConfigurationError("polynomial degree must be an integer >= 1")
    degree = int(degree)
    dim = degree + 1

    def powers(x):
        x = np.asarray(x, dtype=float)
        return np.vander(x, dim, increasing=True)

    def g(x, theta):
        return powers(x) @ np.asarray(theta, dtype=float)

    def grad(x, theta):
        return powers(x)

    def hess(x, theta):
        x = np.asarray(x, dtype=float)
        return np.zeros((x.shape[0], dim, dim))

    def limit(x, theta):
        x = np.asarray(x, dtype=float)
        return np.asarray(theta, dtype=float)[degree] * x**degree

    def limit_grad(x, theta):
        x = np.asarray(x, dtype=float)
        out = np.zeros((x.shape[0], dim))
        out[:, degree] = x**degree
        return out

    klass = FunctionClass(kind=HOMOGENEOUS,
                          order=lambda lam: lam**degree,
                          limit=limit,
                          order_grad=lambda lam: lam**degree,
                          limit_grad=limit_grad)
    name = {1: "linear", 2: "quadratic", 3: "cubic_poly"}.get(degree, f"poly{degree}")
    box = [(-bound, bound)] * dim
    return RegressionModel(name=name, dim=dim, g=g, grad=grad, hess=hess,
                           bounds=box, klass=klass)


def _exp_quadratic() -> RegressionModel:
    def g(x, theta):
        x = np.asarray(x, dtype=float)
        return np.exp(-theta[0] * x * x)

    def grad(x, theta):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        return (-x2 * np.exp(-theta[0] * x2))[:, None]

    def hess(x, theta):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        return (x2 * x2 * np.exp(-theta[0] * x2))[:, None, None]

    return RegressionModel(name="exp_quadratic", dim=1, g=g, grad=grad, hess=hess,
                           bounds=[(0.1, 5.0)],
                           klass=FunctionClass(kind=INTEGRABLE))


def _monomial(power: int) -> RegressionModel:
    # single-coefficient theta * x^power on the box [-5, 5]
    def g(x, theta):
        return theta[0] * np.asarray(x, dtype=float)**power

    def grad(x, theta):
        return (np.asarray(x, dtype=float)**power)[:, None]

    def hess(x, theta):
        x = np.asarray(x, dtype=float)
        return np.zeros((x.shape[0], 1, 1))

    klass = FunctionClass(kind=HOMOGENEOUS,
                          order=lambda lam: lam**power,
                          limit=lambda x, th: th[0] * np.asarray(x, float)**power,
                          order_grad=lambda lam: lam**power,
                          limit_grad=lambda x, th: (np.asarray(x, float)**power)[:, None])
    return RegressionModel(name={1: "linear", 2: "quadratic"}[power], dim=1,
                           g=g, grad=grad, hess=hess, bounds=[(-5.0, 5.0)], klass=klass)


_BUILTINS = {
    "exp_quadratic": _exp_quadratic,
    "quadratic": lambda: _monomial(2),
    "linear": lambda: _monomial(1),
    "cubic_poly": lambda: polynomial_model(3),
}


def builtin_model(name: str) -> RegressionModel:
    """Look up a built-in response family by name."""
    if name.startswith("poly:"):
        try:
            degree = int(name.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad polynomial degree in {name!r}") from None
        return polynomial_model(degree)
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown model {name!r}; expected one of {', '.join(sorted(_BUILTINS))} or poly:<degree>"
        ) from None


@dataclass(frozen=True)
class NoiseSpec:
    """Additive regression noise; only centered Gaussian noise is supported."""

    sd: float = 1.0
    law: str = "gaussian"

    def __post_init__(self):
        if self.law != "gaussian":
            raise ConfigurationError(f"unsupported noise law {self.law!r}")
        if not np.isfinite(self.sd) or self.sd < 0:
            raise ConfigurationError("noise sd must be finite and >= 0")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired regression series (X_t, Y_t), t = 1..n, plus provenance."""

    x: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)
    log_y2: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        y = np.asarray(self.y, dtype=float).copy()
        if x.ndim != 1 or x.shape != y.shape or x.shape[0] < 1:
            raise DataError("dataset needs matching 1-D x and y of positive length")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.log_y2 is not None:
            z = np.asarray(self.log_y2, dtype=float).copy()
            z.flags.writeable = False
            object.__setattr__(self, "log_y2", z)

    @property
    def n(self) -> int:
        return self.x.shape[0]


def generate_dataset(traj: Trajectory, model: RegressionModel, theta0,
                     noise: NoiseSpec, seed: int) -> Dataset:
    """Draw Y_t = g(X_t, theta0) + e_t along the trajectory.

    The noise stream is derived from (seed, tag) so it is independent of the
    chain stream even when the caller reuses one integer for both.
    """
    if traj.is_vector:
        raise ConfigurationError("univariate regression requires a scalar chain")
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    if not model.contains(theta0, interior=True):
        raise DomainError("theta0 must lie in the interior of the parameter box")
    x = traj.observed()
    rng = make_stream(derive_seed(seed, _NOISE_TAG))
    e = gaussians(rng, x.shape[0], noise.sd)
    meta = {"model": model.name, "theta0": tuple(theta0), "noise_sd": noise.sd,
            "seed": int(seed)}
    if traj.spec is not None:
        meta["chain"] = traj.spec.describe()
    return Dataset(x=x, y=model.g(x, theta0) + e, meta=meta)


@dataclass(frozen=True, eq=False)
class VolatilityModel:
    """Multiplicative noise scale: Y_t = sqrt(sigma2(X_t, gamma)) * e_t.

    Estimation happens on ln Y^2, whose conditional mean is
    ln(calibration * sigma2(x, gamma)) with calibration = exp(E ln e^2).
    `calibration` holds that constant when it is treated as known; leave it
    None to have the truncated fit profile it out jointly with gamma.
    """

    name: str
    dim: int
    sigma2: object
    dsigma2: object
    bounds: np.ndarray
    d2sigma2: object = None
    calibration: float | None = None
    klass: FunctionClass | None = None

    def __post_init__(self):
        object.__setattr__(self, "bounds", _as_box(self.bounds, self.dim))
        if self.calibration is not None and not self.calibration > 0:
            raise ConfigurationError("calibration must be positive")

    def log_mean_model(self, calibration: float) -> RegressionModel:
        """Mean model for ln Y^2 at a fixed calibration constant."""
        if not calibration > 0:
            raise DomainError("calibration must be positive")
        offset = float(np.log(calibration))
        sigma2, dsigma2, d2sigma2 = self.sigma2, self.dsigma2, self.d2sigma2

        def g(x, gamma):
            s2 = np.asarray(sigma2(x, gamma), dtype=float)
            if np.any(s2 <= 0):
                raise DomainError("sigma2 must stay positive over the data")
            return offset + np.log(s2)

        def grad(x, gamma):
            s2 = np.asarray(sigma2(x, gamma), dtype=float)
            return np.asarray(dsigma2(x, gamma), dtype=float) / s2[:, None]

        hess = None
        if d2sigma2 is not None:
            def hess(x, gamma):
                s2 = np.asarray(sigma2(x, gamma), dtype=float)
                ds = np.asarray(dsigma2(x, gamma), dtype=float)
                d2 = np.asarray(d2sigma2(x, gamma), dtype=float)
                return (d2 / s2[:, None, None]
                        - ds[:, :, None] * ds[:, None, :] / (s2 * s2)[:, None, None])

        klass = self.klass if self.klass is not None else FunctionClass(kind=INTEGRABLE)
        return RegressionModel(name=f"{self.name}.log_mean", dim=self.dim, g=g,
                               grad=grad, hess=hess, bounds=self.bounds, klass=klass)


def builtin_volatility(name: str, calibration: float | None = None) -> VolatilityModel:
    """Built-in volatility families. `exp_linear` is sigma2(x, gamma) = exp(2 gamma x)."""
    if name != "exp_linear":
        raise ConfigurationError(f"unknown volatility model {name!r}; expected exp_linear")

    def sigma2(x, gamma):
        return np.exp(2.0 * gamma[0] * np.asarray(x, dtype=float))

    def dsigma2(x, gamma):
        x = np.asarray(x, dtype=float)
        return (2.0 * x * np.exp(2.0 * gamma[0] * x))[:, None]

    def d2sigma2(x, gamma):
        x = np.asarray(x, dtype=float)
        return (4.0 * x * x * np.exp(2.0 * gamma[0] * x))[:, None, None]

    # ln(calibration * sigma2) = ln calibration + 2 gamma x: linear growth
    klass = FunctionClass(kind=HOMOGENEOUS,
                          order=lambda lam: lam,
                          limit=lambda x, gm: 2.0 * gm[0] * np.asarray(x, float),
                          order_grad=lambda lam: lam,
                          limit_grad=lambda x, gm: (2.0 * np.asarray(x, float))[:, None])
    return VolatilityModel(name="exp_linear", dim=1, sigma2=sigma2, dsigma2=dsigma2,
                           d2sigma2=d2sigma2, bounds=[(-2.0, 2.0)],
                           calibration=calibration, klass=klass)


def generate_vol_dataset(traj: Trajectory, vol: VolatilityModel, gamma0,
                         seed: int, calibration: float | None = None,
                         noise: str = "gaussian") -> Dataset:
    """Draw Y_t = sqrt(sigma2(X_t, gamma0)) * e_t and its log-squared series.

    noise="gaussian" uses unit-variance Gaussian e_t (calibration constant
    exp(E ln e^2) = GAUSSIAN_CALIBRATION). noise="degenerate" is a test-only
    law with |e_t| pinned to sqrt(calibration), which zeroes the log-scale
    disturbance so exact recovery checks become possible.
    """
    if traj.is_vector:
        raise ConfigurationError("volatility regression requires a scalar chain")
    gamma0 = np.asarray(gamma0, dtype=float).reshape(-1)
    lo, hi = vol.bounds[:, 0], vol.bounds[:, 1]
    if not (np.all(gamma0 > lo) and np.all(gamma0 < hi)):
        raise DomainError("gamma0 must lie in the interior of the parameter box")
    calib = GAUSSIAN_CALIBRATION if calibration is None else float(calibration)
    x = traj.observed()
    rng = make_stream(derive_seed(seed, _NOISE_TAG))
    if noise == "gaussian":
        e = gaussians(rng, x.shape[0], 1.0)
    elif noise == "degenerate":
        e = np.full(x.shape[0], np.sqrt(calib))
    else:
        raise ConfigurationError(f"unsupported volatility noise {noise!r}")
    s2 = np.asarray(vol.sigma2(x, gamma0), dtype=float)
    if np.any(s2 <= 0):
        raise DomainError("sigma2 must stay positive over the data")
    y = np.sqrt(s2) * e
    meta = {"model": vol.name, "gamma0": tuple(gamma0), "calibration": calib,
            "seed": int(seed), "noise": noise}
    if traj.spec is not None:
        meta["chain"] = traj.spec.describe()
    return Dataset(x=x, y=y, meta=meta, log_y2=np.log(y * y))
