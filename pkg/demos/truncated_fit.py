"""Plain vs truncated least squares on a null recurrent regressor.

The truncated fit restricts the loss to observations with |X_t| <= M_n where
M_n grows like the critical value times n^(1-beta). On a well-behaved sample
the two estimators agree; the truncation exists to tame the far-out
observations that a homogeneous regression function would otherwise let
dominate the loss.
"""
import numpy as np

from harrisnls import (NoiseSpec, builtin_model, generate_dataset, mnls_fit,
                       nls_fit, random_walk, simulate_chain, truncation_level)

n = 1500
model = builtin_model("quadratic")  # y = theta * x^2 + e
traj = simulate_chain(random_walk(), n, seed=29)
data = generate_dataset(traj, model, [0.5], NoiseSpec(sd=0.5), seed=30)

plan = truncation_level(n, beta=0.5, alpha=0.01)
print(f"truncation plan: radius {plan.radius:.2f} "
      f"(critical {plan.critical:.4f}, n^0.5 = {n ** 0.5:.1f})")
print(f"points beyond the radius: {int(np.sum(np.abs(data.x) > plan.radius))}")

full = nls_fit(data, model)
trunc = mnls_fit(data, model, plan)

for tag, fit in (("full", full), ("truncated", trunc)):
    print(f"{tag:9s}: theta_hat {fit.theta_hat[0]:.6f}  "
          f"loss {fit.loss_value:.4f}  kept {fit.n_effective}/{n}  "
          f"iterations {fit.iterations}")

# the optimizer trace is non-increasing by construction
assert all(a >= b for a, b in zip(full.trace, full.trace[1:]))
print(f"\noptimizer trace ({len(full.trace)} steps): "
      + " -> ".join(f"{v:.3f}" for v in full.trace[:4]) + " -> ...")

err = abs(trunc.theta_hat[0] - 0.5)
print(f"error vs theta0 = 0.5: {err:.2e} "
      f"(super-consistent: shrinks like 1/N_C(n) sqrt-scale, not 1/sqrt(n))")
