"""Online proximal gradient, three composite baselines, and step-size schedules.

Every learner plays a point, receives a subgradient of the revealed loss at
that point, and moves. All updates reduce to the closed-form box-constrained
weighted-l1 prox, so there is no inner iterative solver. States broadcast
over leading batch axes, which lets a runner advance many independent
streams at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from dynregret.losses import LossEvaluation
from dynregret.regularizers import WeightedL1, prox
from dynregret.vecspace import BoxSet

SCHEDULE_KINDS = ("theorem1", "theorem2", "inverse_t", "constant")
ALGORITHMS = ("OPG", "SAGE", "ACSA", "RDA")


@dataclass(frozen=True)
class StepSchedule:
    """Rule ``t -> eta_t``.

    ``theorem1``: ``eta_t = sigma * t**-gamma`` with ``gamma`` in ``[beta, 1)``;
    ``sigma`` is derived from ``big_r``, ``big_m``, ``horizon``, ``d_beta``
    when not given.

    ``theorem2``: ``eta_t = gamma / t``; ``gamma`` is derived from
    ``big_r``, ``horizon``, ``beta``, ``d_beta``, ``delta``, ``mu`` and
    ``dist0_sq`` (the squared distance between first comparator and first
    iterate) when not given. Requires ``0 < delta < mu`` and
    ``gamma * delta < 1``.

    ``inverse_t``: ``scale / t``. ``constant``: ``scale``.

    ``require_feasible=False`` keeps the derived ``gamma`` even when
    ``gamma * delta >= 1``; the schedule is then usable but the strongly
    convex regret bound no longer applies.

    ``sigma_form="printed"`` evaluates the convex-case constant with
    ``(1 - gamma)`` multiplying only the path term; the default uses the
    minimizer of the three-term regret bound, under which the closed-form
    bound is attained.
    """

    kind: str
    gamma: float | None = None
    beta: float = 0.0
    sigma: float | None = None
    delta: float | None = None
    mu: float = 0.0
    big_m: float | None = None
    big_r: float | None = None
    horizon: int | None = None
    d_beta: float = 0.0
    scale: float | None = None
    dist0_sq: float = 0.0
    sigma_form: str = "optimal"
    require_feasible: bool = True
    coef: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.d_beta < 0:
            raise ValueError("d_beta must be nonnegative")
        coef = getattr(self, "_resolve_" + self.kind)()
        if not (np.isfinite(coef) and coef > 0):
            raise ValueError(f"schedule constant must be positive and finite, got {coef}")
        object.__setattr__(self, "coef", float(coef))

    def _need(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValueError(f"{self.kind} schedule needs {', '.join(missing)}")

    def _resolve_theorem1(self):
        self._need("gamma")
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        if not self.beta <= self.gamma < 1:
            raise ValueError("theorem1 schedule needs gamma in [beta, 1)")
        if self.sigma is not None:
            return self.sigma
        self._need("big_r", "big_m", "horizon")
        return theorem1_sigma(self.big_r, self.big_m, self.horizon, self.beta, self.gamma,
                              self.d_beta, form=self.sigma_form)

    def _resolve_theorem2(self):
        self._need("delta")
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        if not 0 < self.delta < self.mu:
            raise ValueError("theorem2 schedule needs 0 < delta < mu")
        if self.gamma is not None:
            gamma = self.gamma
        else:
            self._need("big_r", "horizon")
            gamma = theorem2_gamma(self.big_r, self.horizon, self.beta, self.d_beta,
                                   self.delta, self.mu, self.dist0_sq)
        if self.require_feasible and not gamma * self.delta < 1:
            hint = ""
            if self.big_r is not None and self.horizon is not None:
                sup = max_feasible_delta(self.big_r, self.horizon, self.beta, self.d_beta,
                                         self.mu, self.dist0_sq)
                hint = f"; feasible delta must be below {sup:.6g}"
            raise ValueError(f"theorem2 schedule needs gamma*delta < 1, got {gamma * self.delta:.6g}{hint}")
        return gamma

    def _resolve_inverse_t(self):
        self._need("scale")
        return self.scale

    _resolve_constant = _resolve_inverse_t

    def eta(self, t: int) -> float:
        if t < 1 or (self.horizon is not None and t > self.horizon):
            raise ValueError(f"round {t} outside schedule horizon {self.horizon}")
        if self.kind == "theorem1":
            return self.coef * t ** -self.gamma
        if self.kind in ("theorem2", "inverse_t"):
            return self.coef / t
        return self.coef

    def etas(self, horizon: int | None = None) -> np.ndarray:
        """All step sizes ``eta_1 .. eta_T`` as an array."""
        T = horizon or self.horizon
        if T is None:
            raise ValueError("horizon required")
        t = np.arange(1, T + 1, dtype=float)
        if self.kind == "theorem1":
            return self.coef * t ** -self.gamma
        if self.kind in ("theorem2", "inverse_t"):
            return self.coef / t
        return np.full(T, self.coef)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "coef"}
        d["coef"] = self.coef
        return d


def schedule_eta(s: StepSchedule, t: int) -> float:
    return s.eta(t)


def theorem1_sigma(R, M, T, beta, gamma, d_beta, form="optimal") -> float:
    path = 2 * R * T ** (2 * gamma - beta - 1) * d_beta
    diam = R**2 * T ** (2 * gamma - 1)
    if form == "optimal":
        inner = (1 - gamma) * (path + diam)
    elif form == "printed":
        inner = (1 - gamma) * path + diam
    else:
        raise ValueError(f"unknown sigma form {form!r}")
    return math.sqrt(inner) / M


def theorem2_gamma(R, T, beta, d_beta, delta, mu, dist0_sq=0.0) -> float:
    return (2 * R * T**-beta * d_beta + R**2) / (delta * R**2 + (mu - delta) * dist0_sq / T)


def max_feasible_delta(R, T, beta, d_beta, mu, dist0_sq) -> float:
    """Supremum of ``delta`` for which the derived ``gamma`` keeps ``gamma*delta < 1``.

    Zero when the first comparator coincides with the first iterate: the
    product then equals ``1 + 2 T**-beta d_beta / R >= 1`` for every delta.
    """
    if dist0_sq <= 0:
        return 0.0
    return mu * dist0_sq / (2 * R * T ** (1 - beta) * d_beta + dist0_sq)


# ---------------------------------------------------------------------------
# pure update rules


@dataclass(frozen=True, eq=False)
class LearnerState:
    """Iterate and algorithm auxiliaries after ``t - 1`` completed rounds.

    ``x`` is the point most recently played (the initial point before the
    first round). SAGE keeps ``y``/``z``; AC-SA keeps ``x_ag`` and its prox
    iterate in ``z``; RDA keeps the running subgradient average ``gbar``.
    """

    algorithm: str
    x: np.ndarray
    t: int = 1
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    x_ag: np.ndarray | None = None
    gbar: np.ndarray | None = None

    @classmethod
    def initial(cls, algorithm: str, x1) -> "LearnerState":
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        x1 = np.array(x1, dtype=float)
        aux = {
            "OPG": {},
            "SAGE": {"y": x1, "z": x1},
            "ACSA": {"x_ag": x1, "z": x1},
            "RDA": {"gbar": np.zeros_like(x1)},
        }[algorithm]
        return cls(algorithm, x1, 1, **aux)


def _expect(state: LearnerState, name: str):
    if state.algorithm != name:
        raise ValueError(f"{name} step applied to a {state.algorithm} state")


def _positive(name, v):
    if not np.all(np.asarray(v) > 0):
        raise ValueError(f"{name} must be positive")


def _col(v):
    v = np.asarray(v, dtype=float)
    return v[..., None] if v.ndim else v


def opg_step(state: LearnerState, f_eval: LossEvaluation, r: WeightedL1, eta, box: BoxSet) -> LearnerState:
    """``x_{t+1} = prox_{eta r}(x_t - eta * g_t)`` with ``g_t`` taken at ``x_t``."""
    _expect(state, "OPG")
    _positive("eta", eta)
    x_next = prox(r, eta, state.x - _col(eta) * f_eval.subgradient, box)
    return replace(state, x=x_next, t=state.t + 1)


def sage_query(state: LearnerState, alpha_t) -> np.ndarray:
    return (1 - alpha_t) * state.y + alpha_t * state.z


def sage_step(state, f_eval_at_x_t, r, box, alpha_t, L_t, mu=0.0) -> LearnerState:
    """Accelerated stochastic gradient step; the gradient is taken at the mixed point."""
    _expect(state, "SAGE")
    if not 0 < alpha_t <= 1:
        raise ValueError("alpha_t must lie in (0, 1]")
    _positive("L_t", L_t)
    x_t = np.clip(sage_query(state, alpha_t), box.lower, box.upper)
    g = f_eval_at_x_t.subgradient
    y_t = prox(r, 1.0 / L_t, x_t - g / L_t, box)
    z_t = state.z - alpha_t / (L_t + mu * alpha_t) * (L_t * (x_t - y_t) + mu * (state.z - x_t))
    z_t = np.clip(z_t, box.lower, box.upper)
    return replace(state, x=x_t, y=y_t, z=z_t, t=state.t + 1)


def acsa_query(state: LearnerState, alpha_t, gamma_t, mu=0.0) -> np.ndarray:
    denom = gamma_t + (1 - alpha_t**2) * mu
    w_ag = (1 - alpha_t) * (mu + gamma_t) / denom
    w_x = alpha_t * ((1 - alpha_t) * mu + gamma_t) / denom
    return w_ag * state.x_ag + w_x * state.z


def acsa_step(state, f_eval_at_x_md, r, box, alpha_t, gamma_t, mu=0.0) -> LearnerState:
    """Accelerated stochastic approximation step with ``V(x, z) = ||x - z||^2 / 2``.

    The two quadratics merge into one with curvature ``q = mu + gamma_t``,
    so the argmin is a prox with step ``alpha_t / q``.
    """
    _expect(state, "ACSA")
    if not 0 < alpha_t <= 1:
        raise ValueError("alpha_t must lie in (0, 1]")
    _positive("gamma_t", gamma_t)
    x_md = np.clip(acsa_query(state, alpha_t, gamma_t, mu), box.lower, box.upper)
    c_md, c_prev = alpha_t * mu, (1 - alpha_t) * mu + gamma_t
    q = c_md + c_prev
    center = (c_md * x_md + c_prev * state.z - alpha_t * f_eval_at_x_md.subgradient) / q
    x_t = prox(r, alpha_t / q, center, box)
    x_ag = alpha_t * x_t + (1 - alpha_t) * state.x_ag
    return replace(state, x=x_md, z=x_t, x_ag=x_ag, t=state.t + 1)


def rda_step(state, f_eval_at_x_t, r, box, beta_t) -> LearnerState:
    """Regularized dual averaging with ``h(x) = ||x||^2 / 2``."""
    _expect(state, "RDA")
    _positive("beta_t", beta_t)
    t = state.t
    gbar = state.gbar + (f_eval_at_x_t.subgradient - state.gbar) / t
    step = t / beta_t
    x_next = prox(r, step, -step * gbar, box)
    return replace(state, x=x_next, gbar=gbar, t=t + 1)


# ---------------------------------------------------------------------------
# stateful learners with their parameter sequences


class OnlineLearner:
    """Owns a :class:`LearnerState` and the algorithm's parameter sequences.

    ``query()`` returns the point to play in the current round; ``update``
    consumes the subgradient of ``f_t`` at that point together with the
    round's regularizer. ``last_step`` is the effective prox step of the most
    recent update, recorded in ledgers.
    """

    name = ""

    def __init__(self, x1):
        self.state = LearnerState.initial(self.name, x1)
        self.last_step = np.nan
        self._box = None

    def _clamp(self, x):
        # mixtures of feasible points can leave the box by rounding
        return x if self._box is None else np.clip(x, self._box.lower, self._box.upper)

    @property
    def t(self) -> int:
        return self.state.t

    def query(self) -> np.ndarray:
        return self.state.x

    def update(self, f_eval: LossEvaluation, r: WeightedL1, box: BoxSet) -> None:
        raise NotImplementedError

    def params(self) -> dict:
        return {}


class OPG(OnlineLearner):
    name = "OPG"

    def __init__(self, x1, etas):
        super().__init__(x1)
        self.etas = np.asarray(etas, dtype=float)
        if np.any(self.etas <= 0):
            raise ValueError("step sizes must be positive")

    @classmethod
    def from_schedule(cls, x1, schedule: StepSchedule, horizon: int | None = None):
        return cls(x1, schedule.etas(horizon))

    def update(self, f_eval, r, box):
        eta = self.etas[self.t - 1]
        self.state = opg_step(self.state, f_eval, r, eta, box)
        self.last_step = eta


class SAGE(OnlineLearner):
    """``alpha_t = 2/(t+1)``; ``L_t = L0 sqrt(t)`` (convex) or ``L0 t`` (strongly convex)."""

    name = "SAGE"

    def __init__(self, x1, L0=1.0, mu=0.0):
        super().__init__(x1)
        _positive("L0", L0)
        self.L0, self.mu = L0, mu

    def _seq(self):
        t = self.t
        L = self.L0 * (t if self.mu > 0 else math.sqrt(t))
        return 2.0 / (t + 1), L

    def query(self):
        return self._clamp(sage_query(self.state, self._seq()[0]))

    def update(self, f_eval, r, box):
        self._box = box
        alpha, L = self._seq()
        self.state = sage_step(self.state, f_eval, r, box, alpha, L, self.mu)
        self.last_step = 1.0 / L

    def params(self):
        return {"L0": self.L0, "mu": self.mu}


class ACSA(OnlineLearner):
    """``alpha_t = 2/(t+1)``; ``gamma_t = g0 sqrt(t)`` (convex) or ``g0 t`` (strongly convex)."""

    name = "ACSA"

    def __init__(self, x1, gamma0=1.0, mu=0.0):
        super().__init__(x1)
        _positive("gamma0", gamma0)
        self.gamma0, self.mu = gamma0, mu

    def _seq(self):
        t = self.t
        g = self.gamma0 * (t if self.mu > 0 else math.sqrt(t))
        return 2.0 / (t + 1), g

    def query(self):
        alpha, g = self._seq()
        return self._clamp(acsa_query(self.state, alpha, g, self.mu))

    def update(self, f_eval, r, box):
        self._box = box
        alpha, g = self._seq()
        self.state = acsa_step(self.state, f_eval, r, box, alpha, g, self.mu)
        self.last_step = alpha / (self.mu + g)

    def params(self):
        return {"gamma0": self.gamma0, "mu": self.mu}


class RDA(OnlineLearner):
    """``beta_t = b0 sqrt(t)``."""

    name = "RDA"

    def __init__(self, x1, beta0=1.0):
        super().__init__(x1)
        _positive("beta0", beta0)
        self.beta0 = beta0

    def update(self, f_eval, r, box):
        beta_t = self.beta0 * math.sqrt(self.t)
        self.last_step = self.t / beta_t
        self.state = rda_step(self.state, f_eval, r, box, beta_t)

    def params(self):
        return {"beta0": self.beta0}


def make_learner(name: str, x1, *, etas=None, mu: float = 0.0, const: float = 1.0) -> OnlineLearner:
    """Build a learner by tag. ``const`` is the baseline's leading constant."""
    if name == "OPG":
        if etas is None:
            raise ValueError("OPG needs a step-size sequence")
        return OPG(x1, etas)
    if name == "SAGE":
        return SAGE(x1, L0=const, mu=mu)
    if name == "ACSA":
        return ACSA(x1, gamma0=const, mu=mu)
    if name == "RDA":
        return RDA(x1, beta0=const)
    raise ValueError(f"unknown algorithm {name!r}")
