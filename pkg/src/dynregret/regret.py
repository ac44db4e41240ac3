"""Dynamic regret accounting, path variation, closed-form bounds and auditors.

Arrays that span a run put time on axis 0: comparator paths are ``(T, ..., n)``
so a batch of independent runs can be handled in one call.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from dynregret.vecspace import BoxSet

AUDIT_TOL = 1e-9
PROVENANCE = ("fixed", "per_round_minimizer", "user_supplied", "best_fixed")


@dataclass(frozen=True, eq=False)
class ComparatorSequence:
    points: np.ndarray
    provenance: str = "user_supplied"

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim < 2:
            raise ValueError("comparator points must have shape (T, ..., n)")
        if not np.all(np.isfinite(p)):
            raise ValueError("comparator points must be finite")
        if self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "points", p)

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def fixed(cls, point, horizon: int) -> "ComparatorSequence":
        point = np.asarray(point, dtype=float)
        return cls(np.broadcast_to(point, (horizon,) + point.shape).copy(), "fixed")

    def check_feasible(self, box: BoxSet, atol: float = 1e-12) -> None:
        if not box.contains(self.points, atol=atol):
            raise ValueError("comparator leaves the feasible box")


def path_variation(u, beta: float = 0.0) -> np.ndarray | float:
    """``sum_{t=2}^T t**beta * ||u_t - u_{t-1}||``."""
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    pts = u.points if isinstance(u, ComparatorSequence) else np.asarray(u, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    T = pts.shape[0]
    if T < 2:
        return 0.0 if pts.ndim == 2 else np.zeros(pts.shape[1:-1])
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
    w = np.arange(2, T + 1, dtype=float) ** beta
    w = w.reshape((T - 1,) + (1,) * (steps.ndim - 1))
    out = np.sum(w * steps, axis=0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# ledger


@dataclass(frozen=True, eq=False)
class RoundRecord:
    t: int
    x: np.ndarray
    u: np.ndarray
    eta: float
    loss_x: float
    loss_u: float
    grad_f: np.ndarray
    grad_r: np.ndarray
    x_next: np.ndarray


_VEC_FIELDS = ("x", "u", "grad_f", "grad_r", "x_next")
_SCALAR_FIELDS = ("eta", "loss_x", "loss_u")


@dataclass(eq=False)
class RegretLedger:
    """Append-only per-round record of one run.

    Build it incrementally with :meth:`append` or in one go with
    :meth:`from_arrays`; vectors are stacked as ``(T, n)`` arrays.
    """

    horizon: int | None = None
    algorithm: str = ""
    meta: dict = field(default_factory=dict)
    _cols: dict = field(default_factory=dict, repr=False)
    _pending: list = field(default_factory=list, repr=False)

    @classmethod
    def from_arrays(cls, *, x, u, eta, loss_x, loss_u, grad_f, grad_r, x_next,
                    horizon=None, algorithm="", meta=None) -> "RegretLedger":
        led = cls(horizon=horizon, algorithm=algorithm, meta=dict(meta or {}))
        cols = {k: np.asarray(v, dtype=float) for k, v in dict(
            x=x, u=u, grad_f=grad_f, grad_r=grad_r, x_next=x_next,
            eta=eta, loss_x=loss_x, loss_u=loss_u).items()}
        T = cols["eta"].shape[0]
        for k in _VEC_FIELDS:
            if cols[k].shape[0] != T or cols[k].ndim != 2:
                raise ValueError(f"column {k} must have shape (T, n)")
        cols["t"] = np.arange(1, T + 1)
        led._cols = cols
        return led

    def append(self, rec: RoundRecord) -> None:
        if rec.t != len(self) + 1:
            raise ValueError(f"ledger expects round {len(self) + 1}, got {rec.t}")
        self._pending.append(rec)

    def _flush(self):
        if not self._pending:
            return
        recs = self._pending
        new = {k: np.array([np.asarray(getattr(r, k), dtype=float) for r in recs]) for k in _VEC_FIELDS + _SCALAR_FIELDS}
        new["t"] = np.array([r.t for r in recs])
        if self._cols:
            self._cols = {k: np.concatenate([self._cols[k], new[k]]) for k in new}
        else:
            self._cols = new
        self._pending = []

    def __len__(self):
        n = self._cols["t"].shape[0] if self._cols else 0
        return n + len(self._pending)

    def __getattr__(self, name):
        if name in _VEC_FIELDS + _SCALAR_FIELDS + ("t",):
            self._flush()
            if not self._cols:
                raise ValueError("empty ledger")
            return self._cols[name]
        raise AttributeError(name)

    def record(self, i: int) -> RoundRecord:
        """Record of round ``i`` (1-based)."""
        self._flush()
        j = i - 1
        return RoundRecord(int(self._cols["t"][j]), *(self._cols[k][j] for k in
                           ("x", "u", "eta", "loss_x", "loss_u", "grad_f", "grad_r", "x_next")))

    def check_complete(self) -> None:
        T = len(self)
        if T == 0:
            raise ValueError("empty ledger")
        if not np.array_equal(self.t, np.arange(1, T + 1)):
            raise ValueError("ledger rounds are not contiguous from 1")
        if self.horizon is not None and T != self.horizon:
            raise ValueError(f"incomplete ledger: {T} of {self.horizon} rounds")

    @property
    def gaps(self) -> np.ndarray:
        return self.loss_x - self.loss_u

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.gaps)

    @property
    def dim(self) -> int:
        return self.x.shape[1]


def dynamic_regret(ledger: RegretLedger) -> float:
    """``sum_t F_t(x_t) - sum_t F_t(u_t)`` over a complete ledger."""
    ledger.check_complete()
    return float(np.sum(ledger.loss_x) - np.sum(ledger.loss_u))


# ---------------------------------------------------------------------------
# closed-form bounds


def theorem1_bound(R, M, T, beta, gamma, d_beta):
    """Convex case: ``sqrt(M^2 (2 R T^(1-beta) D + T R^2) / (1 - gamma))``."""
    if not np.all(np.asarray(gamma) < 1):
        raise ValueError("gamma must be < 1")
    if not np.all(np.asarray(beta) <= np.asarray(gamma)):
        raise ValueError("gamma must be >= beta")
    return np.sqrt(M**2 * (2 * R * np.power(T, 1.0 - beta) * d_beta + T * R**2) / (1 - gamma))


def theorem2_bound(R, M, T, beta, delta, d_beta):
    """Strongly convex case: ``M^2/(2 delta R) (1 + log T)(2 T^-beta D + R)``."""
    if not np.all(np.asarray(delta) > 0):
        raise ValueError("delta must be positive")
    return M**2 / (2 * delta * R) * (1 + np.log(T)) * (2 * np.power(T, -float(beta)) * d_beta + R)


# ---------------------------------------------------------------------------
# auditors


class AuditResult(NamedTuple):
    slack: np.ndarray | float
    passed: bool
    violations: int = 0


def _sq(v):
    return np.sum(v * v, axis=-1)


def lemma1_slack_arrays(x, x_next, u, eta, loss_x, loss_u, grad_f, grad_r, mu=0.0):
    """Right side minus left side of the per-round OPG regret inequality.

    The difference of the two distance terms is evaluated as
    ``<x_next - x, 2u - x - x_next>``, which avoids cancellation when the
    step size is small.
    """
    eta = np.asarray(eta, dtype=float)
    dist_drop = np.sum((x_next - x) * (2 * u - x - x_next), axis=-1)
    rhs = (0.5 / eta) * dist_drop - 0.5 * mu * _sq(u - x) + 0.5 * eta * _sq(grad_f + grad_r)
    return rhs - (loss_x - loss_u)


def lemma1_audit(record_t: RoundRecord, record_t_plus_1: RoundRecord | None = None,
                 mu: float = 0.0, tol: float = AUDIT_TOL) -> AuditResult:
    """Check one OPG round; ``x_{t+1}`` comes from the following record when given."""
    if record_t_plus_1 is not None:
        if record_t_plus_1.t != record_t.t + 1:
            raise ValueError("records are not consecutive")
        x_next = record_t_plus_1.x
    else:
        x_next = record_t.x_next
    s = float(lemma1_slack_arrays(record_t.x, x_next, record_t.u, record_t.eta, record_t.loss_x,
                                  record_t.loss_u, record_t.grad_f, record_t.grad_r, mu))
    return AuditResult(s, s >= -tol, int(s < -tol))


def lemma1_slacks(ledger: RegretLedger, mu: float = 0.0) -> np.ndarray:
    return lemma1_slack_arrays(ledger.x, ledger.x_next, ledger.u, ledger.eta, ledger.loss_x,
                               ledger.loss_u, ledger.grad_f, ledger.grad_r, mu)


def lemma1_audit_ledger(ledger: RegretLedger, mu: float = 0.0, tol: float = AUDIT_TOL) -> AuditResult:
    ledger.check_complete()
    s = lemma1_slacks(ledger, mu)
    bad = int(np.sum(s < -tol))
    return AuditResult(s, bad == 0, bad)


def telescope_slack_arrays(x, x_next, u, etas, radius):
    """RHS minus LHS of the telescoping distance inequality along time axis 0."""
    etas = np.asarray(etas, dtype=float)
    inv = 1.0 / etas
    inv_b = inv.reshape(inv.shape + (1,) * (x.ndim - 1 - inv.ndim)) if inv.ndim < x.ndim - 1 else inv
    dist_drop = np.sum((x_next - x) * (2 * u - x - x_next), axis=-1)
    lhs = np.sum(inv_b * dist_drop, axis=0)
    moves = np.linalg.norm(np.diff(u, axis=0), axis=-1)
    rhs = 2 * radius * np.sum(inv_b[:-1] * moves, axis=0) + radius**2 * inv_b[-1]
    return rhs - lhs


def telescope_audit(ledger: RegretLedger, radius: float, schedule=None, tol: float = AUDIT_TOL) -> AuditResult:
    """Verify the telescoping distance bound for a non-increasing step sequence.

    ``schedule`` may be a :class:`~dynregret.learners.StepSchedule`, an array
    of step sizes, or ``None`` to use the ledger's recorded steps.
    """
    ledger.check_complete()
    T = len(ledger)
    if schedule is None:
        etas = ledger.eta
    elif hasattr(schedule, "etas"):
        etas = schedule.etas(T)
    else:
        etas = np.asarray(schedule, dtype=float)
    if etas.shape[0] != T:
        raise ValueError("step sequence length does not match ledger")
    if np.any(np.diff(etas) > 0):
        raise ValueError("telescoping audit requires a non-increasing step sequence")
    s = float(telescope_slack_arrays(ledger.x, ledger.x_next, ledger.u, etas, radius))
    ok = s >= -tol * T
    return AuditResult(s, ok, int(not ok))


# ---------------------------------------------------------------------------
# CSV export


LEDGER_HEAD = ["t", "eta", "loss_x", "loss_u", "cum_regret", "lemma1_slack"]


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_ledger_csv(ledger: RegretLedger, path, mu: float | None = 0.0) -> None:
    """One row per round; the six summary columns come first, then the vectors.

    ``mu=None`` leaves the per-round slack column empty (non-OPG ledgers).
    """
    ledger.check_complete()
    n = ledger.dim
    slack = lemma1_slacks(ledger, mu) if mu is not None else np.full(len(ledger), np.nan)
    cum = ledger.cumulative_regret
    header = LEDGER_HEAD + [f"{k}_{i}" for k in ("x", "u", "gf", "gr", "xnext") for i in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        vecs = (ledger.x, ledger.u, ledger.grad_f, ledger.grad_r, ledger.x_next)
        for j in range(len(ledger)):
            row = [fmt(int(ledger.t[j])), fmt(ledger.eta[j]), fmt(ledger.loss_x[j]), fmt(ledger.loss_u[j]),
                   fmt(cum[j]), fmt(float(slack[j]))]
            for v in vecs:
                row.extend(fmt(c) for c in v[j])
            w.writerow(row)


def read_ledger_csv(path) -> RegretLedger:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty ledger file")
    header, body = rows[0], rows[1:]
    if header[: len(LEDGER_HEAD)] != LEDGER_HEAD:
        raise ValueError(f"{path}: ledger header must start with {','.join(LEDGER_HEAD)}")
    extra = header[len(LEDGER_HEAD):]
    if len(extra) % 5:
        raise ValueError(f"{path}: ledger vector columns are incomplete")
    n = len(extra) // 5
    if n == 0:
        raise ValueError(f"{path}: ledger lacks iterate/comparator columns needed for auditing")
    try:
        data = np.array([[float(c) if c != "" else np.nan for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged ledger rows")
    k = len(LEDGER_HEAD)
    blocks = [data[:, k + i * n: k + (i + 1) * n] for i in range(5)]
    led = RegretLedger.from_arrays(x=blocks[0], u=blocks[1], grad_f=blocks[2], grad_r=blocks[3],
                                   x_next=blocks[4], eta=data[:, 1], loss_x=data[:, 2], loss_u=data[:, 3])
    if not np.array_equal(data[:, 0], np.arange(1, len(body) + 1)):
        raise ValueError(f"{path}: rounds are not contiguous from 1")
    return led
