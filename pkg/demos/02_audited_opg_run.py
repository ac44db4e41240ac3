"""One OPG run on a drifting stream, with both proof audits replayed.

Every round records the iterate, the comparator, the step size, both
subgradients and the next iterate. From that ledger the per-round regret
inequality and the telescoping distance inequality can be rechecked
without access to the learner.
"""

# %%
import numpy as np

from dynregret.bench import ExperimentConfig, run_experiment
from dynregret.regret import dynamic_regret, lemma1_audit_ledger, path_variation, telescope_audit

cfg = ExperimentConfig.from_dict({
    "objective": "F2", "algorithms": ["OPG"], "horizon": 400, "repetitions": 1, "seed": 11,
    "stream": {"kind": "synthetic", "dimension": 2, "drift_model": "smooth_drift", "drift": 0.01},
    "schedules": {"OPG": {"kind": "inverse_t", "scale": 1.0}},
})
art = run_experiment(cfg)
led = art.results["OPG"].ledgers[0]

# %% the comparator is the exact per-round minimizer
print("path length of the comparator:", round(path_variation(led.u, 0.0), 4))
print("final dynamic regret:", round(dynamic_regret(led), 4))

# %% replay the audits from the ledger alone
l1 = lemma1_audit_ledger(led, mu=cfg.mu)
tel = telescope_audit(led, art.box.diameter)
print(f"per-round inequality: {l1.violations} violations, smallest slack {np.min(l1.slack):.3g}")
print(f"telescoping inequality: passed={tel.passed}, slack {float(tel.slack):.3g}")

# %% a tampered ledger is caught
led.loss_x[10] += 0.5
print("after tampering:", lemma1_audit_ledger(led, mu=cfg.mu).violations, "violation(s)")
