"""
A small Monte Carlo rate study
==============================

Run the ideal and two-stage estimators over a range of sample sizes and fit
the slope of log median sup error against ``log(log n / n)``.  The target
slope is 4/9.  Few replications keep this quick, so the fit is marked as
not adequate; the acceptance suite runs the full version.
"""

# %%
from vbkde.experiments import ExperimentConfig, rate_fit, run_experiment, summarize

cfg = ExperimentConfig.from_dict({
    "density_name": "normal",
    "n_list": [1024, 2048, 4096, 8192],
    "replications": 8,
    "base_seed": 42,
    "r": 0.1,
    "grid_spacing": 0.02,
})
records = run_experiment(cfg, jobs=1)
print(len(records), "replications")

# %%
print(f"{'n':>6} {'true':>9} {'ideal':>9} {'classical':>10} {'variance':>9}")
for row in summarize(records, cfg):
    print(f"{row['n']:>6} {row['median_true']:9.5f} {row['median_ideal']:9.5f}"
          f" {row['median_classical']:10.5f} {row['median_variance']:9.5f}")

# %%
for tag in ("hhm_ideal", "true_twostage", "classical"):
    fit = rate_fit(cfg, records, tag, strict=False)
    print(f"{tag:>14}: slope {fit.slope:.3f}, r^2 {fit.r_squared:.3f}")
