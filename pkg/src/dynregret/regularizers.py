"""Adaptive weighted-l1 regularizers and their box-constrained proximal map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dynregret.losses import LabeledExample, LossEvaluation, LossFn
from dynregret.vecspace import BoxSet


@dataclass(frozen=True, eq=False)
class WeightedL1:
    """``rho * sum_i w_i |x_i|``.

    ``weights`` may carry leading batch axes, one weight vector per stream.
    ``rho = 0`` is accepted and turns the prox into a plain projection.
    """

    rho: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if not np.all((w > 0) & (w <= 1)):
            raise ValueError("weights must lie in (0, 1]")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, rho: float, n: int) -> "WeightedL1":
        return cls(rho, np.ones(n))

    @property
    def thresholds(self) -> np.ndarray:
        return self.rho * self.weights


@dataclass(frozen=True)
class WeightRule:
    """Shrink the weight to ``eps_w`` on coordinates whose magnitude exceeded ``tau``."""

    tau: float
    eps_w: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 0 < self.eps_w < 1:
            raise ValueError("eps_w must lie in (0, 1)")


def update_weights(prev_iterate, rule: WeightRule) -> np.ndarray:
    x = np.asarray(prev_iterate, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("previous iterate has non-finite entries")
    return np.where(np.abs(x) > rule.tau, rule.eps_w, 1.0)


def _check_dim(r: WeightedL1, x: np.ndarray):
    if x.shape[-1] != r.weights.shape[-1]:
        raise ValueError(f"dimension mismatch: x has {x.shape[-1]}, weights have {r.weights.shape[-1]}")


def reg_eval_subgrad(r: WeightedL1, x) -> LossEvaluation:
    """Value and the minimal-norm subgradient ``rho * w * sign(x)``."""
    x = np.asarray(x, dtype=float)
    _check_dim(r, x)
    t = r.thresholds
    return LossEvaluation(np.sum(t * np.abs(x), axis=-1), t * np.sign(x))


def soft_threshold(v, s):
    return np.sign(v) * np.maximum(np.abs(v) - s, 0.0)


def _scale(eta):
    eta = np.asarray(eta, dtype=float)
    if not np.all(eta > 0):
        raise ValueError("step size must be positive")
    return eta[..., None] if eta.ndim else eta


def prox(r: WeightedL1, eta, x, box: BoxSet) -> np.ndarray:
    """``argmin_{u in box} r(u) + ||u - x||^2 / (2 eta)``.

    The objective is separable, so clamping the soft-thresholded point into
    the box is the exact constrained minimizer. ``eta`` may be a scalar or
    carry the batch shape of ``x``.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(r, x)
    if x.shape[-1] != box.dim:
        raise ValueError("dimension mismatch between point and box")
    shrunk = soft_threshold(x, _scale(eta) * r.thresholds)
    return np.clip(shrunk, box.lower, box.upper)


@dataclass(frozen=True, eq=False)
class CompositeLoss:
    """One round's objective ``F_t = f_t + r_t``.

    ``loss`` is the subgradient-oracle part evaluated on ``example``;
    ``reg`` is the prox-friendly part.
    """

    loss: LossFn
    example: LabeledExample
    reg: WeightedL1

    def evaluate(self, x):
        """Return ``(F_t(x), subgrad f_t(x), subgrad r_t(x))``."""
        f = self.loss(x, self.example)
        g = reg_eval_subgrad(self.reg, x)
        return f.value + g.value, f.subgradient, g.subgradient

    def value(self, points) -> np.ndarray:
        """``F_t`` on a stack of points ``(k, n)``; used by the grid oracles."""
        points = np.asarray(points, dtype=float)
        return self.loss(points, self.example).value + reg_eval_subgrad(self.reg, points).value

    __call__ = value
