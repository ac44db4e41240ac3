"""Example streams: seeded synthetic generators and csv/svmlight ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from dynregret.losses import LabeledExample

DRIFT_MODELS = ("stationary", "switching", "smooth_drift")


@dataclass(frozen=True)
class SyntheticStreamSpec:
    """Planted-minimizer classification stream.

    Every round's signed feature ``y_t a_t`` is ``p_t / ||p_t||^2`` plus
    optional isotropic noise, so without noise the planted point ``p_t`` is
    the minimum-norm point on the hinge margin. ``p_t`` sits at radius
    ``1 / feature_scale``. ``smooth_drift`` rotates it in a random plane so
    that consecutive planted points are exactly ``drift * T**drift_horizon_exponent``
    apart; ``switching`` jumps once at ``T // 2``.
    """

    dimension: int = 2
    drift_model: str = "stationary"
    drift: float = 0.0
    label_noise: float = 0.0
    feature_scale: float = 2.0
    feature_noise: float = 0.0
    drift_horizon_exponent: float = 0.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.drift_model not in DRIFT_MODELS:
            raise ValueError(f"unknown drift model {self.drift_model!r}")
        if self.drift < 0:
            raise ValueError("drift magnitude must be nonnegative")
        if not 0 <= self.label_noise < 0.5:
            raise ValueError("label noise rate must lie in [0, 0.5)")
        if not self.feature_scale > 0:
            raise ValueError("feature scale must be positive")
        if self.feature_noise < 0:
            raise ValueError("feature noise must be nonnegative")
        if self.drift_model == "smooth_drift" and self.dimension < 2:
            raise ValueError("smooth_drift needs dimension >= 2")

    def per_round_drift(self, horizon: int) -> float:
        return self.drift * float(horizon) ** self.drift_horizon_exponent

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Stream:
    """Labels ``(T,)`` and features ``(T, n)``; iterates as ``LabeledExample``s."""

    labels: np.ndarray
    features: np.ndarray
    planted: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.labels.shape[0]

    def __getitem__(self, i) -> LabeledExample:
        return LabeledExample(self.labels[i], self.features[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def batch(self) -> LabeledExample:
        return LabeledExample(self.labels, self.features)


def _plane(rng, n):
    # random orthonormal pair; in one dimension the "second" direction is the reflection
    if n == 1:
        e1 = np.array([1.0])
        return e1, -e1
    q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
    return q[:, 0], q[:, 1]


def planted_path(spec: SyntheticStreamSpec, rng: np.random.Generator, horizon: int) -> np.ndarray:
    n, T = spec.dimension, horizon
    r0 = 1.0 / spec.feature_scale
    e1, e2 = _plane(rng, n)
    if spec.drift_model == "stationary":
        return np.tile(r0 * e1, (T, 1))
    if spec.drift_model == "switching":
        p = np.tile(r0 * e1, (T, 1))
        p[T // 2:] = r0 * e2
        return p
    d = spec.per_round_drift(T)
    if d > 2 * r0:
        raise ValueError(f"per-round drift {d} exceeds the planted circle's diameter {2 * r0}")
    phi = 2 * math.asin(d / (2 * r0))
    ang = phi * np.arange(T)
    return r0 * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)


def generate_stream(spec: SyntheticStreamSpec, seed: int, horizon: int) -> Stream:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    p = planted_path(spec, rng, horizon)
    signed = p / np.sum(p * p, axis=1, keepdims=True)
    if spec.feature_noise:
        signed = signed + spec.feature_noise * rng.standard_normal(signed.shape)
    y = rng.choice([-1.0, 1.0], size=horizon)
    a = y[:, None] * signed
    if spec.label_noise:
        flip = rng.random(horizon) < spec.label_noise
        y = np.where(flip, -y, y)
    path_len = float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1))) if horizon > 1 else 0.0
    meta = {"source": "synthetic", "spec": spec.to_dict(), "seed": seed, "horizon": horizon,
            "per_round_drift": spec.per_round_drift(horizon) if spec.drift_model == "smooth_drift" else 0.0,
            "planted_path_length": path_len}
    return Stream(y, a, p, meta)


# ---------------------------------------------------------------------------
# ingestion


def _label(tok: str, where: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ValueError(f"{where}: label {tok!r} is not a number") from None
    if v not in (1.0, -1.0):
        raise ValueError(f"{where}: label must be +1 or -1, got {tok!r}")
    return v


def _read_csv(path: Path, dimension):
    labels, rows = [], []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()) or rec[0].lstrip().startswith("#"):
                continue
            where = f"{path}:{lineno}"
            y = _label(rec[0].strip(), where)
            try:
                feats = [float(c) for c in rec[1:]]
            except ValueError as exc:
                raise ValueError(f"{where}: bad feature value ({exc})") from None
            n = dimension if dimension is not None else (len(rows[0]) if rows else len(feats))
            if len(feats) != n:
                raise ValueError(f"{where}: expected {n} features, got {len(feats)}")
            labels.append(y)
            rows.append(feats)
    return labels, rows


def _read_svmlight(path: Path, dimension):
    labels, entries = [], []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            toks = line.split()
            y = _label(toks[0], where)
            pairs = []
            for tok in toks[1:]:
                idx, sep, val = tok.partition(":")
                if not sep:
                    raise ValueError(f"{where}: malformed pair {tok!r}")
                if idx == "qid":
                    continue
                try:
                    i, v = int(idx), float(val)
                except ValueError:
                    raise ValueError(f"{where}: malformed pair {tok!r}") from None
                if i < 1:
                    raise ValueError(f"{where}: indices are 1-based, got {i}")
                if dimension is not None and i > dimension:
                    raise ValueError(f"{where}: index {i} exceeds declared dimension {dimension}")
                max_idx = max(max_idx, i)
                pairs.append((i - 1, v))
            labels.append(y)
            entries.append(pairs)
    n = dimension if dimension is not None else max_idx
    rows = np.zeros((len(labels), n))
    for r, pairs in enumerate(entries):
        for i, v in pairs:
            rows[r, i] = v
    return labels, rows


def ingest_dataset(path, fmt: str = "csv", dimension: int | None = None) -> Stream:
    """Read a labelled stream, preserving file order and applying no scaling.

    ``csv``: label first, then features, no header. ``svmlight``:
    ``label idx:val ...`` with 1-based indices densified to ``dimension``
    (inferred from the largest index when omitted).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    if fmt == "csv":
        labels, rows = _read_csv(path, dimension)
    elif fmt == "svmlight":
        labels, rows = _read_svmlight(path, dimension)
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")
    if not labels:
        raise ValueError(f"{path}: no examples")
    feats = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(feats)):
        raise ValueError(f"{path}: non-finite feature values")
    return Stream(np.asarray(labels), feats, None,
                  {"source": str(path), "format": fmt, "preprocessing": "none; file order preserved"})
