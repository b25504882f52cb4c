"""Replicated simulation studies: draw chain + noise, fit every requested
estimator on the shared dataset, and reduce to per-cell means and spreads."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chains import ChainSpec, simulate_chain
from .errors import (ConfigurationError, DataError, DomainError,
                     EstimationError, NumericError, StudyError)
from .estimation import (OptimizerConfig, TruncationPlan, lmnls_fit, lnls_fit,
                         mnls_fit, nls_fit, truncation_level)
from .models import (Dataset, NoiseSpec, RegressionModel, VolatilityModel,
                     generate_dataset, generate_vol_dataset)
from .rng import derive_seed

MEAN_ESTIMATORS = ("nls", "mnls")
VOL_ESTIMATORS = ("lnls", "lmnls")
TRUNCATED = ("mnls", "lmnls")
MAX_FAILURE_FRACTION = 0.10

# estimator failures worth recording per replication rather than aborting on
_REP_ERRORS = (EstimationError, NumericError, DataError, DomainError)


@dataclass(frozen=True)
class StudyConfig:
    """One simulation study: a chain, a model, and an estimator battery.

    `beta` feeds the truncation radius for mnls/lmnls; leave it None to use
    the exponent the chain family implies. `vol_noise` only matters when the
    model is a VolatilityModel.
    """

    chain: ChainSpec
    model: object
    theta0: tuple
    sample_sizes: tuple
    noise: NoiseSpec | None = None
    estimators: tuple = MEAN_ESTIMATORS
    replications: int = 500
    alpha: float = 0.01
    beta: float | None = None
    base_seed: int = 0
    vol_noise: str = "gaussian"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if self.replications < 2:
            raise ConfigurationError("need at least two replications")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if len(sizes) == 0 or any(n < 1 for n in sizes):
            raise ConfigurationError("sample sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigurationError("sample sizes must be strictly increasing")
        object.__setattr__(self, "sample_sizes", sizes)
        ests = tuple(self.estimators)
        if len(ests) == 0:
            raise ConfigurationError("no estimators requested")
        known = MEAN_ESTIMATORS + VOL_ESTIMATORS
        for e in ests:
            if e not in known:
                raise ConfigurationError(f"unknown estimator {e!r}")
        if len(set(ests)) != len(ests):
            raise ConfigurationError("duplicate estimator names")
        object.__setattr__(self, "estimators", ests)
        is_vol = isinstance(self.model, VolatilityModel)
        if is_vol:
            if any(e in MEAN_ESTIMATORS for e in ests):
                raise ConfigurationError(
                    "nls/mnls need a RegressionModel, not a volatility model")
        else:
            if not isinstance(self.model, RegressionModel):
                raise ConfigurationError("model must be a RegressionModel or "
                                         "VolatilityModel")
            if any(e in VOL_ESTIMATORS for e in ests):
                raise ConfigurationError("lnls/lmnls need a VolatilityModel")
            if self.noise is None:
                raise ConfigurationError("mean-regression studies need a NoiseSpec")
        theta0 = tuple(float(v) for v in np.atleast_1d(self.theta0))
        if len(theta0) != self.model.dim:
            raise ConfigurationError("theta0 length does not match the model")
        object.__setattr__(self, "theta0", theta0)
        if any(e in TRUNCATED for e in ests) and self.resolved_beta() is None:
            raise ConfigurationError(
                "truncated estimators need beta: the chain family does not pin "
                "it down, pass beta explicitly")

    def resolved_beta(self) -> float | None:
        return self.beta if self.beta is not None else self.chain.known_beta()

    def is_volatility(self) -> bool:
        return isinstance(self.model, VolatilityModel)


@dataclass(frozen=True)
class CellStats:
    """Reduction of one (estimator, sample size) cell across replications."""

    mean: np.ndarray
    se: np.ndarray
    replications: int
    failures: int

    def scalar_mean(self) -> float:
        return float(self.mean[0])

    def scalar_se(self) -> float:
        return float(self.se[0])


@dataclass(frozen=True)
class StudySummary:
    config: StudyConfig
    cells: dict

    def cell(self, estimator: str, n: int) -> CellStats:
        try:
            return self.cells[(estimator, int(n))]
        except KeyError:
            raise DomainError(f"no study cell ({estimator!r}, n={n})") from None

    def table_csv(self) -> str:
        """One row per estimator, mean/se column pair per sample size."""
        dim = len(self.config.theta0)
        cols = ["estimator"]
        for n in self.config.sample_sizes:
            for j in range(dim):
                tag = f"_c{j}" if dim > 1 else ""
                cols += [f"mean_{n}{tag}", f"se_{n}{tag}"]
        lines = [",".join(cols)]
        for est in self.config.estimators:
            row = [est]
            for n in self.config.sample_sizes:
                st = self.cell(est, n)
                for j in range(dim):
                    row += [f"{st.mean[j]:.6g}", f"{st.se[j]:.6g}"]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def ratios_csv(self) -> str:
        """se(n_small)/se(n_large) for every ordered pair of sample sizes."""
        dim = len(self.config.theta0)
        cols = ["estimator", "n_from", "n_to"]
        cols += [f"se_ratio_c{j}" for j in range(dim)] if dim > 1 else ["se_ratio"]
        lines = [",".join(cols)]
        sizes = self.config.sample_sizes
        for est in self.config.estimators:
            for i, n1 in enumerate(sizes):
                for n2 in sizes[i + 1:]:
                    r = np.atleast_1d(rate_ratio(self, est, n1, n2))
                    lines.append(",".join([est, str(n1), str(n2)]
                                          + [f"{v:.6g}" for v in r]))
        return "\n".join(lines) + "\n"


def _fit_one(cfg: StudyConfig, estimator: str, data: Dataset,
             plan: TruncationPlan | None) -> np.ndarray:
    if estimator == "nls":
        res = nls_fit(data, cfg.model, cfg.optimizer)
    elif estimator == "mnls":
        res = mnls_fit(data, cfg.model, plan, cfg.optimizer)
    elif estimator == "lnls":
        res = lnls_fit(data, cfg.model, cfg.optimizer)
    else:
        res = lmnls_fit(data, cfg.model, plan, cfg.optimizer)
    return res.theta_hat


def _one_replication(cfg: StudyConfig, r: int, n: int,
                     plan: TruncationPlan | None) -> dict:
    chain_seed = derive_seed(cfg.base_seed, r, n, 0)
    noise_seed = derive_seed(cfg.base_seed, r, n, 1)
    traj = simulate_chain(cfg.chain, n, chain_seed)
    if cfg.is_volatility():
        data = generate_vol_dataset(traj, cfg.model, cfg.theta0, noise_seed,
                                    noise=cfg.vol_noise)
    else:
        data = generate_dataset(traj, cfg.model, cfg.theta0, cfg.noise,
                                noise_seed)
    out = {}
    for est in cfg.estimators:
        try:
            out[est] = _fit_one(cfg, est, data, plan)
        except _REP_ERRORS:
            out[est] = None
    return out


def run_study(cfg: StudyConfig, threads: int = 1) -> StudySummary:
    """Execute the study. The reduction is deterministic in `base_seed`:
    replication r at size n always sees the same chain and noise draws, and
    results are gathered in replication order regardless of thread count.

    A cell that loses more than MAX_FAILURE_FRACTION of its replications to
    estimator errors aborts the study.
    """
    if threads < 1:
        raise ConfigurationError("threads must be at least one")
    beta = cfg.resolved_beta()
    summary_cells = {}
    for n in cfg.sample_sizes:
        plan = None
        if any(e in TRUNCATED for e in cfg.estimators):
            plan = truncation_level(n, beta, cfg.alpha)
        reps = range(cfg.replications)
        if threads == 1:
            results = [_one_replication(cfg, r, n, plan) for r in reps]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(
                    lambda r: _one_replication(cfg, r, n, plan), reps))
        for est in cfg.estimators:
            draws = [res[est] for res in results if res[est] is not None]
            failures = cfg.replications - len(draws)
            if failures > MAX_FAILURE_FRACTION * cfg.replications:
                raise StudyError(
                    f"cell ({est!r}, n={n}) lost {failures} of "
                    f"{cfg.replications} replications to estimator errors")
            arr = np.asarray(draws)
            summary_cells[(est, n)] = CellStats(
                mean=arr.mean(axis=0), se=np.std(arr, axis=0, ddof=1),
                replications=cfg.replications, failures=failures)
    return StudySummary(config=cfg, cells=summary_cells)


def rate_ratio(summary: StudySummary, estimator: str, n_small: int,
               n_large: int):
    """Spread ratio se(n_small)/se(n_large); grows with the convergence rate."""
    a = summary.cell(estimator, n_small).se
    b = summary.cell(estimator, n_large).se
    with np.errstate(divide="ignore", invalid="ignore"):
        r = a / b
    return float(r[0]) if r.size == 1 else r
