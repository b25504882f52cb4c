"""Nonparametric calibration of an unknown regression curve.

Picks a bandwidth by exact leave-one-out cross-validation, smooths with a
Gaussian kernel, and compares against a low-order polynomial fitted by the
truncated estimator -- the workflow for exploring a series before committing
to a parametric model.
"""
import numpy as np

from harrisnls import (Dataset, KernelRegConfig, calibrate_polynomial,
                       cv_bandwidth, default_bandwidth_grid,
                       kernel_regression, random_walk, simulate_chain,
                       truncation_level)

rng = np.random.default_rng(41)
traj = simulate_chain(random_walk(), 600, seed=40)
x = np.asarray(traj.values[1:], float)
y = 0.1 * x + 0.02 * x ** 2 + rng.normal(scale=0.3, size=x.size)
data = Dataset(x=x, y=y)

grid = default_bandwidth_grid(data)
h = cv_bandwidth(data, grid)
print(f"bandwidth grid [{grid[0]:.3f} .. {grid[-1]:.3f}], chosen h = {h:.3f}")

# smooth at a few probe points and compare with the generating curve
probes = np.linspace(x.min() * 0.8, x.max() * 0.8, 7)
smooth = kernel_regression(probes, data, KernelRegConfig(bandwidth=h))
truth = 0.1 * probes + 0.02 * probes ** 2
for p, s, t in zip(probes, smooth, truth):
    print(f"  m_hat({p:7.2f}) = {s:8.4f}   truth {t:8.4f}")

plan = truncation_level(600, beta=0.5, alpha=0.01)
fit = calibrate_polynomial(data, 2, plan)
print(f"\nquadratic calibration: coefficients {np.round(fit.theta_hat, 4)}")
print(f"(estimator: {fit.estimator}, kept {fit.n_effective} points)")
