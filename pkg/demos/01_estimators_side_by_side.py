"""
Classical, ideal and two-stage estimates on one sample
=======================================================

Draw a normal sample, evaluate the three estimators on a grid inside the
high-density region and compare their errors against the true density.
"""

# %%
import numpy as np

from vbkde.density import get_density
from vbkde.estimators import (
    classical_bandwidth,
    classical_kde_eval,
    default_B,
    hhm_ideal_eval,
    schedule,
    true_estimator_eval,
)
from vbkde.kernel import quintic
from vbkde.regions import region_grid, region_oracle

K = quintic()
r = 0.1
n = 4096
d = get_density("normal")
sample = d.sample(n, 7)
bw = schedule(n)
B = default_B(K, r)
print(f"n = {n}, h1 = {bw.h1:.4f}, h2 = {bw.h2:.4f}, B = {B:.4f}")

# %%
# the region where f >= r, and a grid inside it
reg = region_oracle(d, r)
grid = region_grid(reg, 0.05)
print("region:", reg.intervals, "grid points:", len(grid))

# %%
curves = {
    "classical": classical_kde_eval(sample, classical_bandwidth(n), K, grid),
    "ideal": hhm_ideal_eval(sample, d, bw, B, K, grid),
    "two-stage": true_estimator_eval(sample, bw, B, K, grid),
}
truth = d.pdf(grid)

print(f"{'t':>7} {'f(t)':>9}" + "".join(f"{k:>11}" for k in curves))
for i in range(0, len(grid), 6):
    print(f"{grid[i]:7.3f} {truth[i]:9.5f}" + "".join(f"{c[i]:11.5f}" for c in curves.values()))

# %%
print()
for name, c in curves.items():
    print(f"{name:>10}: sup error {np.max(np.abs(c - truth)):.5f}")
