"""Markov chain simulators and recurrence diagnostics.

The chain families here share one trait: each visits every compact small set
infinitely often, but how often differs in order of magnitude. A stationary
AR(1) returns at a linear rate in n, while a random walk or a threshold model
with unit coefficient outside a compact set returns only at rate sqrt(n).
The regression estimators downstream key their truncation and inference rates
off that return rate, so the diagnostics exposed here (hitting counts, the
recurrence exponent, occupation ratios between sets) are the observable side
of the theory.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError, DataError, DomainError, EstimationError
from .interval import Interval
from .rng import gaussians, make_stream, pareto

AR1 = "ar1"
RANDOM_WALK = "random_walk"
TAR = "tar"
RENEWAL = "renewal"
VAR1 = "var1"
UNIT_ROOT = "unit_root"

FAMILIES = (AR1, RANDOM_WALK, TAR, RENEWAL, VAR1, UNIT_ROOT)

# tolerance for deciding an eigenvalue sits on the unit circle
_UNIT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Parameters of one chain family; validated on construction.

    Use the module-level constructors (`ar1`, `random_walk`, `tar`, `renewal`,
    `var1`, `unit_root`) rather than filling fields by hand.
    """

    family: str
    phi: float | None = None
    phi_inner: float | None = None
    threshold: Interval | None = None
    beta: float | None = None
    transition: np.ndarray | None = None
    intercept: np.ndarray | None = None
    ma_weights: tuple[float, ...] | None = None
    innovation_ar: float = 0.0
    innovation_sd: float = 1.0
    initial_state: float | np.ndarray = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unknown chain family {self.family!r}; expected one of {', '.join(FAMILIES)}"
            )
        if not np.isfinite(self.innovation_sd) or self.innovation_sd < 0:
            raise ConfigurationError("innovation_sd must be finite and >= 0")
        validate = getattr(self, f"_validate_{self.family}")
        validate()

    def _require_scalar_state(self):
        if np.ndim(self.initial_state) != 0:
            raise ConfigurationError(f"{self.family} takes a scalar initial_state")

    def _validate_ar1(self):
        self._require_scalar_state()
        if self.phi is None or not np.isfinite(self.phi):
            raise ConfigurationError("ar1 requires a finite phi")
        if abs(self.phi) >= 1:
            raise ConfigurationError(
                "ar1 requires |phi| < 1; use random_walk for a unit coefficient"
            )

    def _validate_random_walk(self):
        self._require_scalar_state()

    def _validate_tar(self):
        self._require_scalar_state()
        if self.phi_inner is None or not np.isfinite(self.phi_inner):
            raise ConfigurationError("tar requires a finite phi_inner")
        if self.threshold is None or self.threshold.is_empty:
            raise ConfigurationError("tar requires a nonempty threshold interval")

    def _validate_renewal(self):
        self._require_scalar_state()
        if self.beta is None or not (0.0 < self.beta < 1.0):
            raise ConfigurationError("renewal requires beta in (0, 1)")
        if float(self.initial_state) < 0:
            raise ConfigurationError("renewal requires initial_state >= 0")

    def _validate_var1(self):
        a = self.transition
        if a is None or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigurationError("var1 requires a square transition matrix")
        q = a.shape[0]
        if self.intercept is None or self.intercept.shape != (q,):
            raise ConfigurationError("var1 intercept must have the transition's dimension")
        state = np.atleast_1d(np.asarray(self.initial_state, dtype=float))
        if state.shape not in ((1,), (q,)):
            raise ConfigurationError("var1 initial_state must be scalar or length-q")
        mods = np.abs(np.linalg.eigvals(a))
        if np.any(mods > 1.0 + _UNIT_TOL):
            raise ConfigurationError(
                "transient regime: transition matrix has an eigenvalue outside the unit circle"
            )
        n_unit = int(np.sum(np.abs(mods - 1.0) <= _UNIT_TOL))
        if n_unit >= 3:
            raise ConfigurationError(
                "transient regime: three or more unit-circle eigenvalues"
            )
        if n_unit == 2:
            warnings.warn(
                "var1 with two unit-circle eigenvalues may be transient or null "
                "recurrent depending on structure; diagnostics may be unreliable",
                stacklevel=3,
            )

    def _validate_unit_root(self):
        self._require_scalar_state()
        if not self.ma_weights:
            raise ConfigurationError("unit_root requires at least one moving-average weight")
        if not all(np.isfinite(w) for w in self.ma_weights):
            raise ConfigurationError("unit_root moving-average weights must be finite")
        if abs(sum(self.ma_weights)) == 0.0:
            raise ConfigurationError("unit_root moving-average weights must not sum to zero")
        if not abs(self.innovation_ar) < 1:
            raise ConfigurationError("unit_root innovation_ar must satisfy |rho| < 1")

    @property
    def dimension(self) -> int:
        return int(self.transition.shape[0]) if self.family == VAR1 else 1

    def unit_eigenvalue_count(self) -> int | None:
        if self.family != VAR1:
            return None
        mods = np.abs(np.linalg.eigvals(self.transition))
        return int(np.sum(np.abs(mods - 1.0) <= _UNIT_TOL))

    def known_beta(self) -> float | None:
        """Recurrence exponent implied by the family, or None if ambiguous."""
        if self.family == AR1:
            return 1.0
        if self.family in (RANDOM_WALK, TAR, UNIT_ROOT):
            return 0.5
        if self.family == RENEWAL:
            return float(self.beta)
        n_unit = self.unit_eigenvalue_count()
        if n_unit == 0:
            return 1.0
        if n_unit == 1:
            return 0.5
        return None

    def describe(self) -> str:
        parts = [self.family]
        for name in ("phi", "phi_inner", "beta", "innovation_ar"):
            v = getattr(self, name)
            if v is not None and not (name == "innovation_ar" and v == 0.0):
                parts.append(f"{name}={v:g}")
        if self.threshold is not None:
            parts.append(f"threshold={self.threshold}")
        if self.ma_weights is not None:
            parts.append("ma_weights=" + ",".join(f"{w:g}" for w in self.ma_weights))
        parts.append(f"innovation_sd={self.innovation_sd:g}")
        return " ".join(parts)


def ar1(phi: float, innovation_sd: float = 1.0, initial_state: float = 0.0) -> ChainSpec:
    """Stationary-regime AR(1): X_t = phi X_{t-1} + x_t with |phi| < 1."""
    return ChainSpec(AR1, phi=float(phi), innovation_sd=float(innovation_sd),
                     initial_state=float(initial_state))


def random_walk(innovation_sd: float = 1.0, initial_state: float = 0.0) -> ChainSpec:
    """Gaussian random walk: X_t = X_{t-1} + x_t."""
    return ChainSpec(RANDOM_WALK, innovation_sd=float(innovation_sd),
                     initial_state=float(initial_state))


def tar(phi_inner: float, threshold: Interval = Interval(-1.0, 1.0),
        innovation_sd: float = 1.0, initial_state: float = 0.0) -> ChainSpec:
    """Threshold model: AR inside the threshold set, unit coefficient outside."""
    return ChainSpec(TAR, phi_inner=float(phi_inner), threshold=threshold,
                     innovation_sd=float(innovation_sd), initial_state=float(initial_state))


def renewal(beta: float, initial_state: float = 0.0) -> ChainSpec:
    """Countdown chain with Pareto(beta) restarts from [0, 1]."""
    return ChainSpec(RENEWAL, beta=float(beta), initial_state=float(initial_state))


def var1(transition, intercept=None, innovation_sd: float = 1.0,
         initial_state=0.0) -> ChainSpec:
    """Vector AR(1): X_t = A X_{t-1} + b + x_t, rejected when transient."""
    a = np.array(transition, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError("var1 requires a square transition matrix")
    b = np.zeros(a.shape[0]) if intercept is None else np.array(intercept, dtype=float)
    a.flags.writeable = False
    b.flags.writeable = False
    return ChainSpec(VAR1, transition=a, intercept=b, innovation_sd=float(innovation_sd),
                     initial_state=initial_state)


def unit_root(ma_weights=(1.0,), innovation_ar: float = 0.0,
              innovation_sd: float = 1.0, initial_state: float = 0.0) -> ChainSpec:
    """Unit-root process whose increments are a finite moving average, with an
    optional AR(1) layer on the increments (zero prehistory)."""
    return ChainSpec(UNIT_ROOT, ma_weights=tuple(float(w) for w in ma_weights),
                     innovation_ar=float(innovation_ar), innovation_sd=float(innovation_sd),
                     initial_state=float(initial_state))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A simulated or ingested path X_0, ..., X_n (values has length n + 1)."""

    values: np.ndarray
    spec: ChainSpec | None = None
    seed: int | None = None
    hit_coord: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (1, 2) or v.shape[0] < 1:
            raise DataError("trajectory values must be a nonempty 1-D or 2-D array")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        """Number of steps (observations beyond the initial state)."""
        return self.values.shape[0] - 1

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 2

    def observed(self) -> np.ndarray:
        """The scalar series X_1..X_n used by hitting counts and regression."""
        series = self.values
        if self.is_vector:
            if self.hit_coord is None:
                raise ConfigurationError(
                    "vector chain without coordinate designation; set hit_coord"
                )
            series = series[:, self.hit_coord]
        return series[1:]


def simulate_chain(spec: ChainSpec, n: int, seed: int) -> Trajectory:
    """Simulate n steps of the chain from its initial state.

    The same (spec, n, seed) triple regenerates the trajectory bit for bit;
    Gaussian innovations come from an inverse-CDF transform of a counter-based
    uniform stream, so the guarantee holds across platforms.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    n = int(n)
    rng = make_stream(seed)
    sd = spec.innovation_sd

    if spec.family == RANDOM_WALK:
        x0 = float(spec.initial_state)
        values = np.concatenate(([x0], x0 + np.cumsum(gaussians(rng, n, sd))))
    elif spec.family == AR1:
        x0 = float(spec.initial_state)
        eps = gaussians(rng, n, sd)
        out, _ = lfilter([1.0], [1.0, -spec.phi], eps, zi=np.array([spec.phi * x0]))
        values = np.concatenate(([x0], out))
    elif spec.family == TAR:
        x0 = float(spec.initial_state)
        eps = gaussians(rng, n, sd)
        lo, hi = spec.threshold.lo, spec.threshold.hi
        phi = spec.phi_inner
        values = np.empty(n + 1)
        values[0] = x0
        prev = x0
        for t in range(1, n + 1):
            drift = phi * prev if lo <= prev <= hi else prev
            prev = drift + eps[t - 1]
            values[t] = prev
    elif spec.family == RENEWAL:
        x0 = float(spec.initial_state)
        draws = pareto(rng, n, spec.beta)  # at most one restart per step
        values = np.empty(n + 1)
        values[0] = x0
        prev = x0
        k = 0
        for t in range(1, n + 1):
            if prev <= 1.0:
                prev = draws[k]
                k += 1
            else:
                prev = prev - 1.0
            values[t] = prev
    elif spec.family == UNIT_ROOT:
        x0 = float(spec.initial_state)
        eps = gaussians(rng, n, sd)
        inc = lfilter(np.asarray(spec.ma_weights), [1.0], eps)
        if spec.innovation_ar != 0.0:
            inc = lfilter([1.0], [1.0, -spec.innovation_ar], inc)
        values = np.concatenate(([x0], x0 + np.cumsum(inc)))
    else:  # VAR1
        q = spec.dimension
        state = np.broadcast_to(np.atleast_1d(np.asarray(spec.initial_state, float)), (q,))
        eps = gaussians(rng, n * q, sd).reshape(n, q)
        values = np.empty((n + 1, q))
        values[0] = state
        a, b = spec.transition, spec.intercept
        for t in range(1, n + 1):
            values[t] = a @ values[t - 1] + b + eps[t - 1]
    traj = Trajectory(values=values, spec=spec, seed=int(seed),
                      hit_coord=0 if values.ndim == 2 else None)
    return traj


def hitting_count(traj: Trajectory, small_set: Interval) -> int:
    """Visits to the set over t = 1..n; the initial state never counts."""
    if traj.n < 1:
        return 0
    return int(np.count_nonzero(small_set.contains(traj.observed())))


def choose_small_set(traj: Trajectory, min_fraction: float = 0.05) -> Interval:
    """Pilot heuristic: the tightest symmetric interval [-A, A] whose
    empirical visit fraction is at least min_fraction."""
    if not 0 < min_fraction <= 1:
        raise DomainError("min_fraction must lie in (0, 1]")
    if traj.n < 1:
        raise DataError("cannot choose a small set from an empty path")
    radius = float(np.quantile(np.abs(traj.observed()), min_fraction))
    return Interval(-radius, radius)


def estimate_beta(traj: Trajectory, small_set: Interval | None = None) -> float:
    """Recurrence exponent estimate ln N_C(n) / ln n.

    Converges slowly (the error is itself of order 1/ln n), so treat the
    value as a regime indicator rather than a precise parameter.
    """
    if traj.n <= 1:
        raise DomainError("recurrence exponent needs at least two steps")
    if small_set is None:
        small_set = choose_small_set(traj)
    visits = hitting_count(traj, small_set)
    if visits == 0:
        raise EstimationError(f"small set {small_set} never visited")
    return math.log(visits) / math.log(traj.n)


def occupation_ratios(traj: Trajectory, small_set: Interval,
                      bins) -> dict[Interval, float]:
    """Ratios N_B(n) / N_C(n) for each bin B; estimates the invariant-measure
    ratios between the bins and the reference set. The reference set itself is
    always present with ratio exactly 1."""
    base = hitting_count(traj, small_set)
    if base == 0:
        raise EstimationError(f"small set {small_set} never visited")
    series = traj.observed()
    table = {small_set: 1.0}
    for b in bins:
        table[b] = float(np.count_nonzero(b.contains(series))) / base
    return table


@dataclass(frozen=True)
class RecurrenceDiagnostics:
    small_set: Interval
    n: int
    hitting_count: int
    beta_hat: float
    occupation: dict | None = field(default=None, compare=False)


def recurrence_diagnostics(traj: Trajectory, small_set: Interval | None = None,
                           bins=None) -> RecurrenceDiagnostics:
    """Bundle hitting count, recurrence exponent, and (optionally) an
    occupation table over the given bins."""
    if small_set is None:
        small_set = choose_small_set(traj)
    visits = hitting_count(traj, small_set)
    beta_hat = estimate_beta(traj, small_set)
    occupation = occupation_ratios(traj, small_set, bins) if bins is not None else None
    return RecurrenceDiagnostics(small_set=small_set, n=traj.n,
                                 hitting_count=visits, beta_hat=beta_hat,
                                 occupation=occupation)


def unit_bins(lo: float, hi: float) -> list[Interval]:
    """Closed unit intervals [k, k+1] covering [lo, hi], for occupation tables.

    Points landing exactly on an integer count in both neighbouring bins;
    for diagnostic tables on continuous chains that event has measure zero.
    """
    start = math.floor(lo)
    stop = math.ceil(hi)
    return [Interval(float(k), float(k + 1)) for k in range(start, max(stop, start + 1))]
