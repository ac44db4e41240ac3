"""Experiment runner: seeded repetitions of the online loop, audits, and result files.

One round, in order: weights from the learner's previous point, example
revealed, loss and regularizer evaluated at the point played, learner
update, ledger row. Repetitions differ only in the stream seed and are
advanced together along a leading batch axis; results are reduced in
repetition order, so outputs are deterministic for a given config.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dynregret.learners import ALGORITHMS, StepSchedule, make_learner, max_feasible_delta
from dynregret.losses import LOSSES, LabeledExample, make_loss
from dynregret.oracle import GridSpec, best_fixed_point, brute_minimize, hinge_composite_minimizer
from dynregret.regret import (AUDIT_TOL, RegretLedger, fmt, lemma1_slack_arrays, path_variation,
                              telescope_slack_arrays, theorem1_bound, theorem2_bound, write_ledger_csv)
from dynregret.regularizers import CompositeLoss, WeightedL1, WeightRule, reg_eval_subgrad, update_weights
from dynregret.streams import Stream, SyntheticStreamSpec, generate_stream, ingest_dataset
from dynregret.vecspace import BoxSet

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class AuditFailure(RuntimeError):
    pass


COMPARATOR_MODES = ("per_round_minimizer", "fixed", "best_fixed")
_PILOT_KEYS = ("d_beta", "big_m", "dist0_sq")


def _default_schedules():
    return {
        "OPG": {"kind": "inverse_t", "scale": 0.001},
        "SAGE": {"const": 1.0},
        "ACSA": {"const": 1.0},
        "RDA": {"const": 1.0},
    }


@dataclass
class ExperimentConfig:
    """A complete, JSON-serializable description of one benchmark run.

    ``schedules["OPG"]`` holds :class:`StepSchedule` keywords; ``d_beta``,
    ``big_m`` and ``dist0_sq`` may be numbers or ``"pilot"`` (measured on a
    pilot pass of the same stream), ``d_beta`` may also be ``"planted"``
    (path variation of the generator's planted points), ``big_m`` may be
    ``"analytic"`` (a priori subgradient bound), and ``delta`` may be
    ``"auto"`` (``delta_fraction`` times the largest feasible value).
    Baselines take ``{"const": c}``, their leading parameter-sequence
    constant. ``horizon`` is ``R``-independent; checkpoints are prefix
    points of one run (``"prefix"``) or separate runs of each horizon
    (``"horizon_sweep"``).
    """

    objective: str = "F1"
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    horizon: int = 1500
    repetitions: int = 1500
    seed: int = 0
    box: dict = field(default_factory=lambda: {"lower": -1.0, "upper": 1.0})
    rho: float = 0.4
    tau: float = 1.0
    eps_w: float = 0.1
    lam: float = 1.0
    loss: dict = field(default_factory=lambda: {"name": "hinge"})
    beta: float = 0.0
    x1: list | None = None
    stream: dict = field(default_factory=lambda: {"kind": "synthetic", "dimension": 2,
                                                  "drift_model": "smooth_drift", "drift": 0.01})
    schedules: dict = field(default_factory=_default_schedules)
    comparator: dict = field(default_factory=lambda: {"mode": "per_round_minimizer", "solver": "exact"})
    checkpoints: str = "prefix"
    horizons: list | None = None
    tuning: dict | None = None
    ledger_repetitions: int = 1
    chunk_elements: int = 4_000_000
    out: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = cls()
        d = copy.deepcopy(d)
        if "schedules" in d:
            merged = _default_schedules()
            merged.update(d["schedules"])
            d["schedules"] = merged
        cfg = cls(**{**{k: getattr(base, k) for k in known}, **d})
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in self.__dataclass_fields__}

    def validate(self) -> None:
        if self.objective not in ("F1", "F2"):
            raise ConfigError("objective must be F1 or F2")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise ConfigError(f"algorithms must be a non-empty subset of {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms repeated")
        if int(self.horizon) < 1 or int(self.repetitions) < 1:
            raise ConfigError("horizon and repetitions must be >= 1")
        if self.objective == "F2" and not self.lam > 0:
            raise ConfigError("F2 needs lam > 0")
        if not 0 <= self.beta < 1:
            raise ConfigError("beta must lie in [0, 1)")
        if self.checkpoints not in ("prefix", "horizon_sweep"):
            raise ConfigError("checkpoints must be 'prefix' or 'horizon_sweep'")
        if self.loss.get("name", "hinge") not in LOSSES:
            raise ConfigError(f"loss name must be one of {sorted(LOSSES)}")
        if self.loss.get("name", "hinge") != "hinge" and self.comparator.get("solver", "exact") == "exact" \
                and self.comparator.get("mode", "per_round_minimizer") == "per_round_minimizer":
            raise ConfigError("the exact per-round minimizer covers the hinge loss only; use solver 'grid'")
        mode = self.comparator.get("mode", "per_round_minimizer")
        if mode not in COMPARATOR_MODES:
            raise ConfigError(f"comparator mode must be one of {COMPARATOR_MODES}")
        if self.comparator.get("solver", "exact") not in ("exact", "grid"):
            raise ConfigError("comparator solver must be 'exact' or 'grid'")
        if self.stream.get("kind", "synthetic") not in ("synthetic", "file"):
            raise ConfigError("stream kind must be 'synthetic' or 'file'")
        try:
            WeightRule(self.tau, self.eps_w)
            WeightedL1(self.rho, [1.0])
            if self.stream.get("kind", "synthetic") == "synthetic":
                _synthetic_spec(self.stream)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # derived -----------------------------------------------------------

    @property
    def mu(self) -> float:
        return self.lam if self.objective == "F2" else 0.0

    def horizon_list(self) -> list[int]:
        if self.checkpoints == "prefix":
            return [int(self.horizon)]
        if self.horizons:
            hs = sorted({int(h) for h in self.horizons})
        else:
            hs = checkpoints_for(int(self.horizon))
        if hs[0] < 1:
            raise ConfigError("horizons must be >= 1")
        return hs

    def rep_seeds(self) -> list[int]:
        return [int(s) for s in np.random.SeedSequence(int(self.seed)).generate_state(int(self.repetitions))]


def checkpoints_for(T: int) -> list[int]:
    """Powers of two up to ``T``, plus ``T``."""
    cps = [2**k for k in range(int(math.log2(T)) + 1) if 2**k <= T]
    if cps[-1] != T:
        cps.append(T)
    return cps


def _synthetic_spec(d: dict) -> SyntheticStreamSpec:
    kw = {k: v for k, v in d.items() if k != "kind"}
    try:
        return SyntheticStreamSpec(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad synthetic stream spec: {exc}") from None


class RunningStats:
    """Welford mean/variance, updated one repetition at a time in order."""

    def __init__(self, shape=()):
        self.n = 0
        self.mean = np.zeros(shape)
        self._m2 = np.zeros(shape)

    def push(self, v):
        v = np.asarray(v, dtype=float)
        self.n += 1
        d = v - self.mean
        self.mean = self.mean + d / self.n
        self._m2 = self._m2 + d * (v - self.mean)

    @property
    def std(self):
        return np.sqrt(self._m2 / self.n) if self.n else np.full_like(self.mean, np.nan)


# ---------------------------------------------------------------------------
# the online loop over a batch of repetitions


@dataclass
class BatchTrace:
    """Everything recorded for a batch of repetitions, time on axis 0."""

    x: np.ndarray          # (T, B, n) points played
    x_next: np.ndarray     # (T, B, n)
    weights: np.ndarray    # (T, B, n)
    grad_f: np.ndarray
    grad_r: np.ndarray
    loss_x: np.ndarray     # (T, B)
    eta: np.ndarray        # (T, B)


def simulate(algorithm: str, labels, features, *, box: BoxSet, x1, loss, rho, rule: WeightRule,
             mu=0.0, etas=None, const=1.0) -> BatchTrace:
    """Run one algorithm over a batch of streams: ``labels (B, T)``, ``features (B, T, n)``."""
    B, T, n = features.shape
    x_start = np.broadcast_to(np.asarray(x1, dtype=float), (B, n)).copy()
    learner = make_learner(algorithm, x_start, etas=etas, mu=mu, const=const)
    X = np.empty((T, B, n))
    W = np.empty((T, B, n))
    GF = np.empty((T, B, n))
    GR = np.empty((T, B, n))
    FX = np.empty((T, B))
    ETA = np.empty((T, B))
    prev = x_start
    for t in range(T):
        reg = WeightedL1(rho, update_weights(prev, rule))
        ex = LabeledExample(labels[:, t], features[:, t])
        x = learner.query()
        f = loss(x, ex)
        r = reg_eval_subgrad(reg, x)
        learner.update(f, reg, box)
        X[t], W[t], GF[t], GR[t] = x, reg.weights, f.subgradient, r.subgradient
        FX[t] = f.value + r.value
        ETA[t] = learner.last_step
        prev = x
    XN = np.empty_like(X)
    XN[:-1] = X[1:]
    XN[-1] = learner.query()
    return BatchTrace(X, XN, W, GF, GR, FX, ETA)


def comparator_points(mode: str, trace: BatchTrace, labels, features, *, box, loss, rho, lam,
                      solver="exact", point=None, resolution=1e-4) -> np.ndarray:
    """Comparator path ``(T, B, n)`` evaluated against the learner's realized regularizers."""
    T, B, n = trace.x.shape
    thresholds = rho * trace.weights
    if mode == "fixed":
        p = np.asarray(point if point is not None else trace.x[0, 0], dtype=float)
        return np.broadcast_to(box.lower * 0 + p, (T, B, n)).copy()
    if mode == "per_round_minimizer":
        if solver == "exact":
            s = np.swapaxes(labels[..., None] * features, 0, 1)
            return hinge_composite_minimizer(s, thresholds, lam, box)
        grid = GridSpec(resolution)
        out = np.empty((T, B, n))
        for t in range(T):
            for b in range(B):
                F = CompositeLoss(loss, LabeledExample(labels[b, t], features[b, t]),
                                  WeightedL1(rho, trace.weights[t, b]))
                out[t, b] = brute_minimize(F, box, grid)
        return out
    grid = GridSpec(resolution)
    out = np.empty((T, B, n))
    for b in range(B):
        ex = LabeledExample(labels[b], features[b])
        out[:, b] = best_fixed_point(loss, ex, thresholds[:, b], box, grid)
    return out


def comparator_loss(U, trace: BatchTrace, labels, features, *, loss, rho) -> np.ndarray:
    ex = LabeledExample(labels.T, np.swapaxes(features, 0, 1))
    return loss(U, ex).value + np.sum(rho * trace.weights * np.abs(U), axis=-1)


# ---------------------------------------------------------------------------
# schedules


def _analytic_m(features, box: BoxSet, rho, lam) -> np.ndarray:
    n = features.shape[-1]
    far = np.linalg.norm(np.maximum(np.abs(box.lower), np.abs(box.upper)))
    return np.max(np.linalg.norm(features, axis=-1), axis=-1) + lam * far + rho * math.sqrt(n)


@dataclass
class OPGPlan:
    schedules: list      # one StepSchedule per repetition in the batch
    pilot: dict          # measured pilot statistics per repetition


def _provisional_schedule(spec: dict, T: int, R: float, m_guess: float, mu: float, beta: float) -> StepSchedule:
    kind = spec["kind"]
    if kind == "theorem1":
        return StepSchedule("theorem1", gamma=spec.get("gamma", 0.5), beta=beta, big_r=R, big_m=m_guess,
                            horizon=T, d_beta=0.0, sigma_form=spec.get("sigma_form", "optimal"))
    return StepSchedule("inverse_t", scale=1.0 / mu, horizon=T)


def _build_schedule(spec: dict, T: int, R: float, beta: float, mu: float, stats: dict) -> StepSchedule:
    kw = {k: v for k, v in spec.items() if k not in ("delta_fraction", "pilot_passes")}
    kw["beta"] = beta
    kw.setdefault("horizon", T)
    kw["horizon"] = T
    if kw["kind"] in ("theorem1", "theorem2"):
        kw.setdefault("big_r", R)
        for key in _PILOT_KEYS:
            if isinstance(kw.get(key), str):
                kw[key] = stats[key]
    if kw["kind"] == "theorem2":
        kw.setdefault("mu", mu)
        if kw.get("delta") == "auto":
            sup = max_feasible_delta(kw["big_r"], T, beta, kw.get("d_beta", 0.0), kw["mu"], kw.get("dist0_sq", 0.0))
            kw["delta"] = spec.get("delta_fraction", 0.5) * sup
    return StepSchedule(**kw)


# ---------------------------------------------------------------------------
# one algorithm, one horizon, one batch


@dataclass
class BatchResult:
    cum_at: np.ndarray        # (len(cps), B) cumulative regret at checkpoints
    final: np.ndarray         # (B,)
    big_m: np.ndarray         # (B,)
    d_beta: np.ndarray        # (B,)
    bound: np.ndarray | None  # (len(cps), B) or None
    lemma1_bad: int
    lemma1_rounds: int
    telescope_ok: np.ndarray | None
    bound_ok: np.ndarray | None
    coef: np.ndarray | None
    ledgers: list


class Problem:
    """Static pieces of a run shared by all algorithms and repetitions."""

    def __init__(self, cfg: ExperimentConfig, n: int):
        self.cfg = cfg
        lower = np.broadcast_to(np.asarray(cfg.box.get("lower", -1.0), dtype=float), (n,))
        upper = np.broadcast_to(np.asarray(cfg.box.get("upper", 1.0), dtype=float), (n,))
        try:
            self.box = BoxSet(lower, upper)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.R = self.box.diameter
        self.mu = cfg.mu
        self.lam = cfg.lam if cfg.objective == "F2" else 0.0
        params = {k: v for k, v in cfg.loss.items() if k != "name"}
        try:
            self.loss = make_loss(cfg.loss.get("name", "hinge"), lam=self.lam, **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad loss settings: {exc}") from None
        self.rule = WeightRule(cfg.tau, cfg.eps_w)
        x1 = np.zeros(n) if cfg.x1 is None else np.asarray(cfg.x1, dtype=float)
        if x1.shape != (n,):
            raise ConfigError(f"x1 must have length {n}")
        self.x1 = np.clip(x1, self.box.lower, self.box.upper)
        comp = cfg.comparator
        self.comp_mode = comp.get("mode", "per_round_minimizer")
        self.comp_solver = comp.get("solver", "exact")
        self.comp_point = comp.get("point")
        self.comp_res = float(comp.get("resolution", 1e-4))
        if self.comp_mode != "fixed" and (self.comp_mode == "best_fixed" or self.comp_solver == "grid") and n > 3:
            raise ConfigError("grid-based comparators are limited to dimension <= 3")

    def comparator(self, trace, labels, features):
        return comparator_points(self.comp_mode, trace, labels, features, box=self.box, loss=self.loss,
                                 rho=self.cfg.rho, lam=self.lam, solver=self.comp_solver,
                                 point=self.comp_point, resolution=self.comp_res)

    def evaluate(self, trace, labels, features):
        U = self.comparator(trace, labels, features)
        FU = comparator_loss(U, trace, labels, features, loss=self.loss, rho=self.cfg.rho)
        return U, FU

    def simulate(self, algorithm, labels, features, etas=None, const=1.0):
        return simulate(algorithm, labels, features, box=self.box, x1=self.x1, loss=self.loss,
                        rho=self.cfg.rho, rule=self.rule, mu=self.mu, etas=etas, const=const)

    def pilot_stats(self, trace, labels, features) -> dict:
        U, _ = self.evaluate(trace, labels, features)
        return {
            "d_beta": np.atleast_1d(path_variation(U, self.cfg.beta)),
            "big_m": np.max(np.linalg.norm(trace.grad_f + trace.grad_r, axis=-1), axis=0),
            "dist0_sq": np.sum((U[0] - trace.x[0]) ** 2, axis=-1),
        }

    def plan_opg(self, spec: dict, labels, features, T: int, extra: list) -> OPGPlan:
        B = labels.shape[0]
        kind = spec.get("kind")
        if kind not in ("theorem1", "theorem2", "inverse_t", "constant"):
            raise ConfigError(f"unknown OPG schedule kind {kind!r}")
        stats = {}
        if kind in ("theorem1", "theorem2"):
            needs_pilot = any(spec.get(k) == "pilot" for k in _PILOT_KEYS)
            m_analytic = _analytic_m(features, self.box, self.cfg.rho, self.lam)
            if spec.get("big_m") == "analytic":
                stats["big_m"] = m_analytic
            if spec.get("d_beta") == "planted":
                if not extra or extra[0] is None:
                    raise ConfigError("d_beta='planted' needs a synthetic stream")
                stats["d_beta"] = np.array([path_variation(p, self.cfg.beta) for p in extra])
            if needs_pilot:
                passes = int(spec.get("pilot_passes", 1))
                etas = np.stack([_provisional_schedule(spec, T, self.R, m, self.mu, self.cfg.beta).etas(T)
                                 for m in m_analytic], axis=1)
                for _ in range(passes):
                    trace = self.simulate("OPG", labels, features, etas=etas)
                    measured = self.pilot_stats(trace, labels, features)
                    for k in _PILOT_KEYS:
                        if spec.get(k) == "pilot":
                            stats[k] = measured[k]
                    etas = np.stack([self._schedule(spec, T, stats, b).etas(T) for b in range(B)], axis=1)
        scheds = [self._schedule(spec, T, stats, b) for b in range(B)]
        return OPGPlan(scheds, {k: v.tolist() for k, v in stats.items()})

    def _schedule(self, spec, T, stats, b):
        per = {k: float(v[b]) for k, v in stats.items()}
        try:
            return _build_schedule(spec, T, self.R, self.cfg.beta, self.mu, per)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"OPG schedule (repetition batch index {b}, horizon {T}): {exc}") from None

    def run_batch(self, algorithm, labels, features, cps, *, const=1.0, plan: OPGPlan | None = None,
                  keep_ledgers: int = 0) -> BatchResult:
        T = labels.shape[1]
        etas = None
        if algorithm == "OPG":
            etas = np.stack([s.etas(T) for s in plan.schedules], axis=1)
        trace = self.simulate(algorithm, labels, features, etas=etas, const=const)
        U, FU = self.evaluate(trace, labels, features)
        gaps = trace.loss_x - FU
        cum = np.cumsum(gaps, axis=0)
        idx = np.asarray(cps) - 1
        gnorm = np.linalg.norm(trace.grad_f + trace.grad_r, axis=-1)
        m_meas = np.max(gnorm, axis=0)
        d_meas = np.atleast_1d(path_variation(U, self.cfg.beta))

        bound = bound_ok = tel_ok = coef = None
        bad = rounds = 0
        if algorithm == "OPG":
            slack = lemma1_slack_arrays(trace.x, trace.x_next, U, trace.eta, trace.loss_x, FU,
                                        trace.grad_f, trace.grad_r, self.mu)
            bad, rounds = int(np.sum(slack < -AUDIT_TOL)), slack.size
            tel = telescope_slack_arrays(trace.x, trace.x_next, U, trace.eta, self.R)
            tel_ok = np.atleast_1d(tel >= -AUDIT_TOL * T)
            coef = np.array([s.coef for s in plan.schedules])
            kind = plan.schedules[0].kind
            if kind in ("theorem1", "theorem2"):
                run_m = np.maximum.accumulate(gnorm, axis=0)[idx]
                steps = np.linalg.norm(np.diff(U, axis=0), axis=-1)
                w = np.arange(2, T + 1, dtype=float) ** self.cfg.beta
                run_d = np.concatenate([np.zeros((1, steps.shape[1])), np.cumsum(w[:, None] * steps, axis=0)])[idx]
                tT = np.asarray(cps, dtype=float)[:, None]
                s0 = plan.schedules[0]
                if kind == "theorem1":
                    bound = theorem1_bound(self.R, run_m, tT, self.cfg.beta, s0.gamma, run_d)
                else:
                    deltas = np.array([s.delta for s in plan.schedules])
                    bound = theorem2_bound(self.R, run_m, tT, self.cfg.beta, deltas, run_d)
                bound_ok = cum[-1] <= bound[-1] + AUDIT_TOL

        ledgers = []
        for b in range(min(keep_ledgers, labels.shape[0])):
            ledgers.append(RegretLedger.from_arrays(
                x=trace.x[:, b], u=U[:, b], eta=trace.eta[:, b], loss_x=trace.loss_x[:, b], loss_u=FU[:, b],
                grad_f=trace.grad_f[:, b], grad_r=trace.grad_r[:, b], x_next=trace.x_next[:, b],
                horizon=T, algorithm=algorithm))
        return BatchResult(cum[idx], cum[-1], m_meas, d_meas, bound, bad, rounds, tel_ok, bound_ok, coef, ledgers)


# ---------------------------------------------------------------------------
# driver


@dataclass
class AlgorithmSummary:
    algorithm: str
    const: float | None
    horizons: list
    checkpoints: dict          # horizon -> list of checkpoint rounds
    mean_avg: dict             # horizon -> array over checkpoints
    std_avg: dict
    mean_bound_avg: dict       # horizon -> array or None
    final_regret: dict         # horizon -> array over repetitions
    big_m: dict
    d_beta: dict
    bound_ok: dict
    telescope_ok: dict
    lemma1: dict               # horizon -> (bad, rounds)
    coef: dict
    pilot: dict
    ledgers: list


@dataclass
class RunArtifacts:
    config: ExperimentConfig
    seeds: list
    box: BoxSet
    results: dict              # algorithm -> AlgorithmSummary
    tuning: dict
    stream_meta: dict
    notes: dict

    @property
    def audit_failed(self) -> bool:
        for s in self.results.values():
            for h in s.horizons:
                bad, _ = s.lemma1.get(h, (0, 0))
                if bad or (s.telescope_ok.get(h) is not None and not np.all(s.telescope_ok[h])):
                    return True
        return False

    def ordering(self) -> dict:
        h = max(next(iter(self.results.values())).horizons)
        means = {a: float(s.mean_avg[h][-1]) for a, s in self.results.items()}
        base = {a: v for a, v in means.items() if a != "OPG"}
        out = {"horizon": h, "mean_avg_regret": means}
        if "OPG" in means and base:
            best = min(base, key=base.get)
            out["best_baseline"] = best
            out["opg_best"] = bool(means["OPG"] <= base[best])
        return out


def _load_streams(cfg: ExperimentConfig, seeds, horizon):
    src = cfg.stream
    if src.get("kind", "synthetic") == "file":
        try:
            st = ingest_dataset(src["path"], src.get("format", "csv"), src.get("dimension"))
        except KeyError:
            raise ConfigError("file stream needs 'path'") from None
        if len(st) < horizon:
            raise ConfigError(f"dataset has {len(st)} rows, fewer than horizon {horizon}")
        labels = np.tile(st.labels[:horizon], (len(seeds), 1))
        feats = np.tile(st.features[:horizon], (len(seeds), 1, 1))
        return labels, feats, [None] * len(seeds), st.meta
    spec = _synthetic_spec(src)
    streams = [generate_stream(spec, s, horizon) for s in seeds]
    labels = np.stack([s.labels for s in streams])
    feats = np.stack([s.features for s in streams])
    meta = {k: v for k, v in streams[0].meta.items() if k not in ("seed", "planted_path_length")}
    meta["planted_path_length_mean"] = float(np.mean([s.meta["planted_path_length"] for s in streams]))
    return labels, feats, [s.planted for s in streams], meta


def _chunks(n_total, T, n, budget):
    size = max(1, budget // max(1, T * n * 8))
    return [(i, min(n_total, i + size)) for i in range(0, n_total, size)]


def _tune(problem: Problem, cfg, alg, seeds, horizon):
    tuning = cfg.tuning or {}
    grid = [float(c) for c in tuning.get("grid", [])]
    if not grid:
        return float(cfg.schedules.get(alg, {}).get("const", 1.0)), None
    k = int(tuning.get("repetitions", min(10, len(seeds))))
    labels, feats, _, _ = _load_streams(cfg, seeds[:k], horizon)
    scores = {}
    for c in grid:
        res = problem.run_batch(alg, labels, feats, [horizon], const=c)
        scores[c] = float(np.mean(res.final) / horizon)
    best = min(grid, key=lambda c: (scores[c], c))
    return best, {"grid": grid, "repetitions": k, "mean_avg_regret": [scores[c] for c in grid], "chosen": best}


def run_experiment(cfg: ExperimentConfig) -> RunArtifacts:
    cfg.validate()
    seeds = cfg.rep_seeds()
    horizons = cfg.horizon_list()
    probe_labels, probe_feats, _, stream_meta = _load_streams(cfg, seeds[:1], min(horizons))
    n = probe_feats.shape[-1]
    problem = Problem(cfg, n)

    tuning_info, consts = {}, {}
    for alg in cfg.algorithms:
        if alg == "OPG":
            continue
        consts[alg], info = _tune(problem, cfg, alg, seeds, max(horizons))
        if info:
            tuning_info[alg] = info

    results = {}
    for alg in cfg.algorithms:
        results[alg] = AlgorithmSummary(alg, consts.get(alg), horizons, {}, {}, {}, {}, {}, {}, {}, {},
                                        {}, {}, {}, {}, [])

    for h in horizons:
        cps = checkpoints_for(h) if cfg.checkpoints == "prefix" else [h]
        keep = int(cfg.ledger_repetitions) if h == max(horizons) else 0
        acc = {alg: {"stats": RunningStats((len(cps),)), "bstats": RunningStats((len(cps),)),
                     "final": [], "m": [], "d": [], "bok": [], "tok": [], "bad": 0, "rounds": 0,
                     "coef": [], "pilot": {}, "has_bound": False} for alg in cfg.algorithms}
        for lo, hi in _chunks(len(seeds), h, n, cfg.chunk_elements):
            labels, feats, planted, _ = _load_streams(cfg, seeds[lo:hi], h)
            for alg in cfg.algorithms:
                plan = None
                if alg == "OPG":
                    plan = problem.plan_opg(dict(cfg.schedules["OPG"]), labels, feats, h, planted)
                res = problem.run_batch(alg, labels, feats, cps, const=consts.get(alg, 1.0), plan=plan,
                                        keep_ledgers=max(0, keep - lo))
                a = acc[alg]
                for b in range(labels.shape[0]):
                    a["stats"].push(res.cum_at[:, b] / np.asarray(cps, dtype=float))
                    if res.bound is not None:
                        a["bstats"].push(res.bound[:, b] / np.asarray(cps, dtype=float))
                a["has_bound"] = res.bound is not None
                a["final"].extend(res.final.tolist())
                a["m"].extend(res.big_m.tolist())
                a["d"].extend(res.d_beta.tolist())
                if res.bound_ok is not None:
                    a["bok"].extend(res.bound_ok.tolist())
                if res.telescope_ok is not None:
                    a["tok"].extend(res.telescope_ok.tolist())
                if res.coef is not None:
                    a["coef"].extend(res.coef.tolist())
                a["bad"] += res.lemma1_bad
                a["rounds"] += res.lemma1_rounds
                if plan is not None:
                    for k, v in plan.pilot.items():
                        a["pilot"].setdefault(k, []).extend(v)
                results[alg].ledgers.extend(res.ledgers)
        for alg, a in acc.items():
            s = results[alg]
            s.checkpoints[h] = cps
            s.mean_avg[h] = a["stats"].mean
            s.std_avg[h] = a["stats"].std
            s.mean_bound_avg[h] = a["bstats"].mean if a["has_bound"] else None
            s.final_regret[h] = np.asarray(a["final"])
            s.big_m[h] = np.asarray(a["m"])
            s.d_beta[h] = np.asarray(a["d"])
            s.bound_ok[h] = np.asarray(a["bok"]) if a["bok"] else None
            s.telescope_ok[h] = np.asarray(a["tok"]) if a["tok"] else None
            s.lemma1[h] = (a["bad"], a["rounds"])
            s.coef[h] = np.asarray(a["coef"]) if a["coef"] else None
            s.pilot[h] = a["pilot"]

    notes = {
        "regularizer_weights": "each algorithm's r_t uses weights from that algorithm's own previous point; "
                               "the comparator is scored against the same realized r_t",
        "initial_weights": "round 1 weights come from x_1",
        "played_point": {"OPG": "x_t", "SAGE": "x_t = (1-a)y + a z", "ACSA": "x_md", "RDA": "x_t"},
        "std": "population standard deviation over repetitions",
        "repetitions_vary": "stream seed only",
    }
    if cfg.stream.get("kind") == "file":
        notes["dataset"] = "file order preserved, no scaling, every repetition sees the same rows"
    return RunArtifacts(cfg, seeds, problem.box, results, tuning_info, stream_meta, notes)


# ---------------------------------------------------------------------------
# output files


def _stat_block(v):
    if v is None or len(v) == 0:
        return None
    v = np.asarray(v, dtype=float)
    return {"mean": float(v.mean()), "min": float(v.min()), "max": float(v.max())}


def summary_dict(art: RunArtifacts) -> dict:
    algs = {}
    for alg, s in art.results.items():
        per_h = {}
        for h in s.horizons:
            bad, rounds = s.lemma1[h]
            entry = {
                "mean_avg_regret": float(s.mean_avg[h][-1]),
                "std_avg_regret": float(s.std_avg[h][-1]),
                "measured_M": _stat_block(s.big_m[h]),
                "D_beta": _stat_block(s.d_beta[h]),
            }
            if alg == "OPG":
                entry["lemma1_pass_rate"] = 1.0 - bad / rounds if rounds else None
                entry["lemma1_violations"] = bad
                tok = s.telescope_ok[h]
                entry["telescope_pass_rate"] = float(np.mean(tok)) if tok is not None else None
                bok = s.bound_ok[h]
                entry["bound_compliance_rate"] = float(np.mean(bok)) if bok is not None else None
                entry["schedule_coef"] = _stat_block(s.coef[h])
                if s.pilot[h]:
                    entry["pilot"] = {k: _stat_block(v) for k, v in s.pilot[h].items()}
            per_h[str(h)] = entry
        algs[alg] = {"const": s.const, "horizons": per_h}
    cfg = art.config
    return {
        "config": cfg.to_dict(),
        "derived": {"dimension": art.box.dim, "box": art.box.to_dict(), "R": art.box.diameter,
                    "mu": cfg.mu, "horizons": cfg.horizon_list(),
                    "comparator_mode": cfg.comparator.get("mode", "per_round_minimizer"),
                    "comparator_solver": cfg.comparator.get("solver", "exact"),
                    "beta": cfg.beta},
        "stream": art.stream_meta,
        "seeds": art.seeds,
        "tuning": art.tuning,
        "algorithms": algs,
        "ordering": art.ordering(),
        "audit_failed": art.audit_failed,
        "notes": art.notes,
    }


def emit_results(art: RunArtifacts, out_dir) -> list[Path]:
    """Write ``regret_curve.csv``, ``summary.json`` and per-algorithm ledgers."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        curve = out / "regret_curve.csv"
        with open(curve, "w", newline="") as fh:
            fh.write("algorithm,T_checkpoint,mean_avg_regret,std_avg_regret,bound_value\n")
            for alg, s in art.results.items():
                for h in s.horizons:
                    bnd = s.mean_bound_avg[h]
                    for i, c in enumerate(s.checkpoints[h]):
                        b = "" if bnd is None else fmt(bnd[i])
                        fh.write(f"{alg},{c},{fmt(s.mean_avg[h][i])},{fmt(s.std_avg[h][i])},{b}\n")
        written.append(curve)
        for alg, s in art.results.items():
            for k, led in enumerate(s.ledgers):
                name = f"ledger_{alg}.csv" if k == 0 else f"ledger_{alg}_rep{k}.csv"
                write_ledger_csv(led, out / name, mu=art.config.mu if alg == "OPG" else None)
                written.append(out / name)
        summ = out / "summary.json"
        with open(summ, "w") as fh:
            json.dump(summary_dict(art), fh, indent=2)
            fh.write("\n")
        written.append(summ)
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return written
