"""Weighted l1 prox over a box, checked against a brute-force grid.

The prox of ``rho * sum_i w_i |x_i|`` restricted to a box is a soft
threshold followed by a clamp. This script builds the weights from a
previous iterate, applies the closed form, and compares it with a grid
search over the box.
"""

# %%
import numpy as np

from dynregret.oracle import GridSpec, brute_prox
from dynregret.regularizers import WeightedL1, WeightRule, prox, update_weights
from dynregret.vecspace import BoxSet

rng = np.random.default_rng(0)

# %% weights: coordinates that were large last round get the small weight
rule = WeightRule(tau=1.0, eps_w=0.1)
x_prev = np.array([1.4, -0.3, 0.9])
w = update_weights(x_prev, rule)
print("previous iterate", x_prev, "-> weights", w)

# %% one prox step
box = BoxSet([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0])
r = WeightedL1(rho=0.4, weights=w)
eta = 0.5
v = np.array([1.7, -0.1, 0.25])
closed = prox(r, eta, v, box)
grid = brute_prox(r, eta, v, box, GridSpec(1e-4))
print("closed form", closed + 0.0)
print("grid search", grid)
print("max gap    ", np.max(np.abs(closed - grid)))

# %% a few hundred random instances in 1 to 3 dimensions
worst = 0.0
for _ in range(300):
    n = int(rng.integers(1, 4))
    lo = rng.uniform(-2, 0.5, n)
    b = BoxSet(lo, lo + rng.uniform(0.1, 2.5, n))
    ri = WeightedL1(rng.uniform(0, 2), rng.uniform(0.05, 1, n))
    e = float(rng.uniform(0.01, 2))
    x = rng.uniform(-3, 3, n)
    worst = max(worst, float(np.max(np.abs(prox(ri, e, x, b) - brute_prox(ri, e, x, b, GridSpec(1e-4))))))
print(f"worst coordinate gap over 300 instances: {worst:.2e}")
