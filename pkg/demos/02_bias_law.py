"""
The h^4 bias law of the ideal estimator
=======================================

The expected ideal estimate ``tilde_f(t; h)`` differs from ``f(t)`` by
``h^4 H(t)`` plus smaller terms.  Watch the scaled bias settle onto ``H``
as ``h`` shrinks.
"""

# %%
import math

import numpy as np

from vbkde.bias_oracle import H_eval, bias_ratio_curve, tilde_f
from vbkde.density import get_density
from vbkde.kernel import quintic
from vbkde.regions import region_oracle

K = quintic()
r = 0.1
d = get_density("normal")

# %%
# at the mode H has a closed form for the standard normal
print(f"H(0)           = {H_eval(0.0, d, K):.12f}")
print(f"sqrt(2 pi)/520 = {math.sqrt(2 * math.pi) / 520:.12f}")

# %%
# a wide window keeps the whole kernel mass inside it on the region
B = K.half_width / math.sqrt(r / 2)
(a, b), = region_oracle(d, r).intervals
grid = np.linspace(a, b, 402)[1:-1]
for row in bias_ratio_curve(d, K, r, B, [0.4, 0.2, 0.1, 0.05], grid=grid):
    print(f"h = {row['h']:<5} sup |bias/h^4 - H| = {row['sup_dev']:.5f} at t = {row['argmax_t']:+.3f}")
print(f"10% of sup |H| = {0.1 * np.max(np.abs(H_eval(grid, d, K))):.5f}")

# %%
# pointwise view at a few locations
for t in (0.0, 0.8, 1.6):
    vals = [(tilde_f(t, h, d, K, B) - d.pdf(t)) / h ** 4 for h in (0.2, 0.1, 0.05)]
    print(f"t = {t}: " + "  ".join(f"{v:.6f}" for v in vals) + f"  -> H = {H_eval(t, d, K):.6f}")
