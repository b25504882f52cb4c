"""Confidence intervals for both regression regimes.

Integrable regression functions (here a Gaussian bump) get their rate from
the hitting count of a small set and a kernel density estimate at its
center; asymptotically homogeneous ones (here the quadratic) use the binned
occupation-ratio design. Both produce a CovarianceEstimate with the interval
already attached.
"""
import numpy as np

from harrisnls import (Interval, NoiseSpec, ar1, builtin_model,
                       covariance_ah, covariance_integrable, generate_dataset,
                       mnls_fit, nls_fit, random_walk, simulate_chain,
                       truncation_level)

C = Interval(-1.0, 1.0)

# --- integrable case: stationary regressor, bump model -------------------
n = 800
bump = builtin_model("exp_quadratic")
traj = simulate_chain(ar1(0.5), n, seed=5)
data = generate_dataset(traj, bump, [1.0], NoiseSpec(sd=0.5), seed=6)
fit = nls_fit(data, bump)
cov = covariance_integrable(data, bump, fit.theta_hat, C)
lo, hi = cov.ci[0]
print(f"bump model:      theta_hat {fit.theta_hat[0]:.4f}  "
      f"95% CI [{lo:.4f}, {hi:.4f}]  rate factor {cov.rate_factor:.0f}")
print(f"  kind = {cov.kind}, covers theta0=1: {lo <= 1.0 <= hi}")

# --- homogeneous case: random walk regressor, quadratic model ------------
n = 1500
quad = builtin_model("quadratic")
traj = simulate_chain(random_walk(), n, seed=7)
data = generate_dataset(traj, quad, [0.5], NoiseSpec(sd=0.5), seed=8)
plan = truncation_level(n, beta=0.5, alpha=0.01)
fit = mnls_fit(data, quad, plan)
cov = covariance_ah(data, quad, fit.theta_hat, plan, C)
lo, hi = cov.ci[0]
width = hi - lo
print(f"quadratic model: theta_hat {fit.theta_hat[0]:.6f}  "
      f"95% CI [{lo:.6f}, {hi:.6f}]")
print(f"  interval width {width:.2e} -- orders tighter than a stationary "
      f"design of the same size would give")
