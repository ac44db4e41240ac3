"""OPG next to SAGE, AC-SA and RDA on both synthetic protocols.

Baseline constants are tuned over a three-point grid on a few seeds. The
results are written with ``emit_results``, producing the same files as the
command line ``run``.
"""

# %%
import sys
import tempfile

from dynregret.bench import ExperimentConfig, emit_results, run_experiment

stream = {"kind": "synthetic", "dimension": 2, "drift_model": "smooth_drift", "drift": 0.05,
          "drift_horizon_exponent": -0.5, "label_noise": 0.1}
opg = {
    "F1": {"kind": "inverse_t", "scale": 0.001},
    "F2": {"kind": "theorem2", "delta": "auto", "d_beta": "pilot", "big_m": "pilot", "dist0_sq": "pilot"},
}

# %%
out_root = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="dynregret-")
for obj in ("F1", "F2"):
    cfg = ExperimentConfig.from_dict({
        "objective": obj, "horizon": 1500, "repetitions": 20, "seed": 3, "stream": stream,
        "schedules": {"OPG": opg[obj]}, "tuning": {"grid": [0.1, 1.0, 10.0], "repetitions": 5},
    })
    art = run_experiment(cfg)
    order = art.ordering()
    print(obj, {a: round(v, 4) for a, v in order["mean_avg_regret"].items()},
          "tuned:", {a: t["chosen"] for a, t in art.tuning.items()})
    for path in emit_results(art, f"{out_root}/{obj}"):
        print("  wrote", path)
