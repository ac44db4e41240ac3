"""Measured regret against the convex-case bound, and its growth rate.

Each horizon is a separate run, because the step constant depends on T.
The comparator path length and the subgradient bound come from a pilot
pass over the same stream. The drift per round shrinks like T^-1/2, so
the path length grows like sqrt(T) and the bound grows like T^(3/4).
"""

# %%
import numpy as np

from dynregret.bench import ExperimentConfig, run_experiment

horizons = [2**k for k in range(4, 12)]
cfg = ExperimentConfig.from_dict({
    "objective": "F1", "algorithms": ["OPG"], "horizon": max(horizons), "repetitions": 8, "seed": 7,
    "stream": {"kind": "synthetic", "dimension": 2, "drift_model": "smooth_drift", "drift": 0.05,
               "drift_horizon_exponent": -0.5},
    "schedules": {"OPG": {"kind": "theorem1", "gamma": 0.5, "d_beta": "pilot", "big_m": "pilot"}},
    "checkpoints": "horizon_sweep", "horizons": horizons,
})
s = run_experiment(cfg).results["OPG"]

# %%
print(f"{'T':>6} {'mean Reg':>10} {'mean bound':>11} {'D_0':>7} {'all under bound':>16}")
for h in horizons:
    reg = s.final_regret[h].mean()
    bound = s.mean_bound_avg[h][-1] * h
    print(f"{h:6d} {reg:10.4g} {bound:11.4g} {s.d_beta[h].mean():7.3f} {bool(np.all(s.bound_ok[h])):>16}")

# %% log-log slope of mean regret over the larger horizons
big = [h for h in horizons if h >= 256]
slope = np.polyfit(np.log(big), np.log([s.final_regret[h].mean() for h in big]), 1)[0]
print(f"fitted growth exponent {slope:.3f} (bound exponent 0.75)")
