"""Tour of the chain families and their recurrence diagnostics.

Simulates each family from the same seed, then shows how often the path
visits the unit interval and what recurrence index that implies. The
stationary AR(1) piles up near the origin; the walk and threshold chains
spread out and revisit it only on the square-root scale.
"""
import numpy as np

from harrisnls import (Interval, ar1, estimate_beta, hitting_count,
                       random_walk, renewal, simulate_chain, tar, unit_root)

C = Interval(-1.0, 1.0)

families = {
    "ar1(0.5)": ar1(0.5),
    "random_walk": random_walk(),
    "tar(0.5, [-1,1])": tar(0.5, C),
    "renewal(beta=0.5)": renewal(0.5),
    "unit_root MA(2)": unit_root(ma_weights=[1.0, 0.4], innovation_ar=0.2),
}

n = 20_000
print(f"{'family':20s} {'N_C(n)':>8s} {'beta_hat':>9s} {'max |X|':>9s}")
for name, spec in families.items():
    traj = simulate_chain(spec, n, seed=11)
    values = np.asarray(traj.values, float)
    visits = hitting_count(traj, C)
    b = estimate_beta(traj, C)
    print(f"{name:20s} {visits:8d} {b:9.3f} {np.max(np.abs(values)):9.1f}")

# The index estimate converges like 1/log n, so even 20k steps leaves the
# stationary chain visibly short of its limit 1. Watch it crawl:
print("\nar1(0.5) beta_hat by sample size")
for size in (1_000, 10_000, 100_000):
    traj = simulate_chain(ar1(0.5), size, seed=11)
    print(f"  n = {size:>7,d}: {estimate_beta(traj, C):.3f}")
