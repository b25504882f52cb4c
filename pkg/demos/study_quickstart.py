"""A small Monte Carlo study, end to end.

Fifty replications of plain and truncated least squares on the quadratic
model over a random walk, at two sample sizes. Prints the summary table as
CSV plus the rate diagnostics. Results are reproducible from the base seed
and unchanged by the thread count.
"""
from harrisnls import (NoiseSpec, StudyConfig, builtin_model, random_walk,
                       rate_ratio, run_study)

cfg = StudyConfig(
    chain=random_walk(),
    model=builtin_model("quadratic"),
    theta0=[0.5],
    sample_sizes=(400, 1600),
    noise=NoiseSpec(sd=0.5),
    estimators=("nls", "mnls"),
    replications=50,
    alpha=0.01,
    base_seed=2024,
)
summary = run_study(cfg)

print(summary.table_csv())
print(summary.ratios_csv())

r = rate_ratio(summary, "mnls", 400, 1600)
print(f"mnls se(400)/se(1600) = {r:.2f}")
print("a root-n estimator would give 2; the truncated fit on a walk "
      "contracts at the full sample rate instead")

cell = summary.cell("mnls", 1600)
print(f"\ncell ('mnls', 1600): mean {cell.mean[0]:.6f} se {cell.se[0]:.2e} "
      f"over {cell.replications} replications ({cell.failures} failures)")
