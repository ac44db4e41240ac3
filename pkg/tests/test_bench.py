import json

import numpy as np
import pytest

import dynregret.bench as bench
from dynregret.bench import (ConfigError, ExperimentConfig, RunningStats, checkpoints_for, emit_results,
                             run_experiment, simulate)
from dynregret.learners import OPG, make_learner
from dynregret.losses import LabeledExample, hinge, ridged
from dynregret.regularizers import CompositeLoss, WeightedL1, WeightRule, update_weights
from dynregret.streams import SyntheticStreamSpec, generate_stream
from dynregret.vecspace import BoxSet


def small(**kw):
    d = {"horizon": 16, "repetitions": 3, "seed": 1,
         "stream": {"kind": "synthetic", "dimension": 2, "drift_model": "smooth_drift", "drift": 0.05}}
    d.update(kw)
    return ExperimentConfig.from_dict(d)


def test_config_defaults_echo_protocol():
    cfg = ExperimentConfig()
    assert (cfg.rho, cfg.tau, cfg.eps_w, cfg.lam, cfg.repetitions) == (0.4, 1.0, 0.1, 1.0, 1500)
    assert cfg.schedules["OPG"] == {"kind": "inverse_t", "scale": 0.001}
    assert cfg.mu == 0.0
    assert ExperimentConfig.from_dict({"objective": "F2"}).mu == 1.0


@pytest.mark.parametrize("bad", [
    {"objective": "F3"}, {"algorithms": ["OPG", "SGD"]}, {"algorithms": []}, {"horizon": 0},
    {"repetitions": 0}, {"beta": 1.0}, {"rho": -1.0}, {"eps_w": 0.0}, {"tau": -1},
    {"checkpoints": "every"}, {"comparator": {"mode": "oracle"}}, {"frobnicate": 1},
    {"stream": {"kind": "synthetic", "drift": -1.0}}, {"stream": {"kind": "synthetic", "label_noise": 0.5}},
    {"loss": {"name": "absolute"}},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_checkpoints():
    assert checkpoints_for(1) == [1]
    assert checkpoints_for(4) == [1, 2, 4]
    assert checkpoints_for(1500)[-2:] == [1024, 1500]


def test_rep_seeds_depend_only_on_seed():
    a = ExperimentConfig.from_dict({"seed": 5, "repetitions": 4}).rep_seeds()
    b = ExperimentConfig.from_dict({"seed": 5, "repetitions": 6}).rep_seeds()
    assert a == b[:4] and len(set(b)) == 6


def test_simulate_matches_scalar_learner_loop():
    # the batched loop follows the per-round protocol of the OnlineLearner objects
    spec = SyntheticStreamSpec(dimension=2, drift_model="smooth_drift", drift=0.05, label_noise=0.1)
    box = BoxSet([-1, -1], [1, 1])
    rule = WeightRule(1.0, 0.1)
    loss = ridged(hinge, 1.0)
    T = 30
    streams = [generate_stream(spec, s, T) for s in (3, 4)]
    labels = np.stack([s.labels for s in streams])
    feats = np.stack([s.features for s in streams])
    for alg in ("OPG", "SAGE", "ACSA", "RDA"):
        etas = np.tile(1.0 / np.arange(1, T + 1), (2, 1)).T if alg == "OPG" else None
        tr = simulate(alg, labels, feats, box=box, x1=np.zeros(2), loss=loss, rho=0.4, rule=rule,
                      mu=1.0, etas=etas, const=1.0)
        for b in range(2):
            if alg == "OPG":
                L = OPG(np.zeros(2), etas[:, b])
            else:
                L = make_learner(alg, np.zeros(2), const=1.0, mu=1.0)
            prev = np.zeros(2)
            for t in range(T):
                x = L.query()
                np.testing.assert_allclose(tr.x[t, b], x, atol=1e-12)
                r = WeightedL1(0.4, update_weights(prev, rule))
                ex = LabeledExample(labels[b, t], feats[b, t])
                value, _, _ = CompositeLoss(loss, ex, r).evaluate(x)
                assert tr.loss_x[t, b] == pytest.approx(float(value), abs=1e-12)
                L.update(loss(x, ex), r, box)
                prev = x


def test_t1_identity_comparator_zero_regret():
    cfg = small(horizon=1, algorithms=["OPG"], x1=[0.3, -0.2],
                comparator={"mode": "fixed", "point": [0.3, -0.2]})
    art = run_experiment(cfg)
    s = art.results["OPG"]
    assert s.final_regret[1].tolist() == [0.0, 0.0, 0.0]
    assert not art.audit_failed


def test_stationary_average_regret_decreases():
    cfg = ExperimentConfig.from_dict({
        "objective": "F1", "algorithms": ["OPG", "RDA"], "horizon": 256, "repetitions": 3, "seed": 2,
        "rho": 0.0, "box": {"lower": -1.0, "upper": 1.0},
        "stream": {"kind": "synthetic", "dimension": 2, "drift_model": "stationary", "label_noise": 0.1},
        "schedules": {"OPG": {"kind": "constant", "scale": 0.1}},
        "comparator": {"mode": "best_fixed", "resolution": 0.02},
    })
    art = run_experiment(cfg)
    for alg in ("OPG", "RDA"):
        avg = art.results[alg].mean_avg[256]
        cps = art.results[alg].checkpoints[256]
        # compare well-separated checkpoints; the first few rounds are noisy
        late = [avg[cps.index(c)] for c in (16, 64, 256)]
        assert late[0] > late[1] > late[2], (alg, late)


def test_f1_paper_parameters_complete_with_audits():
    cfg = small(horizon=200, repetitions=4, algorithms=["OPG"])
    art = run_experiment(cfg)
    s = art.results["OPG"]
    assert s.lemma1[200][0] == 0 and s.lemma1[200][1] == 800
    assert np.all(s.telescope_ok[200])
    assert not art.audit_failed


def test_emit_rows_and_bytes(tmp_path):
    cfg = small(horizon=4, repetitions=2, algorithms=["OPG", "RDA"])
    files_a = emit_results(run_experiment(cfg), tmp_path / "a")
    files_b = emit_results(run_experiment(cfg), tmp_path / "b")
    rows = (tmp_path / "a" / "regret_curve.csv").read_text().splitlines()
    assert rows[0] == "algorithm,T_checkpoint,mean_avg_regret,std_avg_regret,bound_value"
    assert len(rows) == 1 + 6
    assert [f.name for f in files_a] == [f.name for f in files_b]
    for fa, fb in zip(files_a, files_b):
        assert fa.read_bytes() == fb.read_bytes()
    summ = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summ["config"]["rho"] == 0.4 and summ["derived"]["comparator_mode"] == "per_round_minimizer"
    assert len(summ["seeds"]) == 2
    assert summ["algorithms"]["OPG"]["horizons"]["4"]["lemma1_pass_rate"] == 1.0
    assert "measured_M" in summ["algorithms"]["RDA"]["horizons"]["4"]


def test_chunking_does_not_change_results(tmp_path):
    cfg = small(horizon=32, repetitions=5, algorithms=["OPG", "SAGE"])
    tiny = ExperimentConfig.from_dict({**cfg.to_dict(), "chunk_elements": 1})
    emit_results(run_experiment(cfg), tmp_path / "a")
    emit_results(run_experiment(tiny), tmp_path / "b")
    for name in ("regret_curve.csv", "ledger_OPG.csv", "ledger_SAGE.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_audit_failure_flagged(tmp_path, monkeypatch):
    real = bench.lemma1_slack_arrays
    monkeypatch.setattr(bench, "lemma1_slack_arrays", lambda *a, **k: real(*a, **k) - 1.0)
    art = run_experiment(small(horizon=8, repetitions=2, algorithms=["OPG"]))
    assert art.audit_failed
    emit_results(art, tmp_path)
    assert json.loads((tmp_path / "summary.json").read_text())["audit_failed"] is True


def test_running_stats_match_second_pass(rng):
    v = rng.normal(3.0, 2.0, size=(257, 5))
    rs = RunningStats((5,))
    for row in v:
        rs.push(row)
    np.testing.assert_allclose(rs.mean, v.mean(axis=0), atol=1e-9)
    np.testing.assert_allclose(rs.std, v.std(axis=0), atol=1e-9)


def test_run_aggregates_match_final_regret():
    art = run_experiment(small(horizon=20, repetitions=7, algorithms=["OPG", "ACSA"]))
    for s in art.results.values():
        fin = s.final_regret[20] / 20
        assert abs(s.mean_avg[20][-1] - fin.mean()) <= 1e-9
        assert abs(s.std_avg[20][-1] - fin.std()) <= 1e-9


def test_horizon_sweep_theorem1_bounds_hold():
    cfg = ExperimentConfig.from_dict({
        "algorithms": ["OPG"], "repetitions": 3, "checkpoints": "horizon_sweep", "horizons": [16, 64, 256],
        "stream": {"kind": "synthetic", "dimension": 2, "drift_model": "smooth_drift", "drift": 0.05,
                   "drift_horizon_exponent": -0.5},
        "schedules": {"OPG": {"kind": "theorem1", "gamma": 0.5, "d_beta": "pilot", "big_m": "pilot"}},
    })
    art = run_experiment(cfg)
    s = art.results["OPG"]
    for h in (16, 64, 256):
        assert s.checkpoints[h] == [h]
        assert np.all(s.bound_ok[h])
        assert np.all(s.mean_bound_avg[h] >= s.mean_avg[h])


def test_theorem2_infeasible_schedule_is_config_error():
    cfg = small(objective="F2", algorithms=["OPG"],
                schedules={"OPG": {"kind": "theorem2", "delta": 0.5, "d_beta": "pilot", "big_m": "pilot"}})
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_theorem2_auto_delta_feasible():
    cfg = small(objective="F2", algorithms=["OPG"], horizon=64,
                schedules={"OPG": {"kind": "theorem2", "delta": "auto", "delta_fraction": 0.9,
                                   "d_beta": "pilot", "big_m": "pilot", "dist0_sq": "pilot"}})
    art = run_experiment(cfg)
    s = art.results["OPG"]
    assert np.all(s.bound_ok[64]) and not art.audit_failed


def test_tuning_picks_grid_minimum():
    cfg = small(horizon=64, repetitions=4, algorithms=["SAGE"], tuning={"grid": [0.1, 1.0, 10.0], "repetitions": 2})
    art = run_experiment(cfg)
    info = art.tuning["SAGE"]
    assert info["chosen"] == info["grid"][int(np.argmin(info["mean_avg_regret"]))]
    assert art.results["SAGE"].const == info["chosen"]


def test_file_stream(tmp_path):
    rng = np.random.default_rng(0)
    rows = [f"{1 if rng.random() < .5 else -1},{rng.normal():.6f},{rng.normal():.6f}" for _ in range(30)]
    (tmp_path / "d.csv").write_text("\n".join(rows) + "\n")
    cfg = ExperimentConfig.from_dict({"algorithms": ["OPG", "RDA"], "horizon": 30, "repetitions": 2,
                                      "stream": {"kind": "file", "path": str(tmp_path / "d.csv")}})
    art = run_experiment(cfg)
    np.testing.assert_array_equal(art.results["OPG"].final_regret[30][0], art.results["OPG"].final_regret[30][1])
    short = ExperimentConfig.from_dict({**cfg.to_dict(), "horizon": 31})
    with pytest.raises(ConfigError):
        run_experiment(short)


def test_emit_unwritable(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    art = run_experiment(small(horizon=2, repetitions=1, algorithms=["RDA"]))
    with pytest.raises(OSError):
        emit_results(art, blocker / "sub")
