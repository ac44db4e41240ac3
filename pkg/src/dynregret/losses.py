"""Nonsmooth convex losses with value-and-subgradient oracles.

Each loss maps a query point ``x`` and a :class:`LabeledExample` to a
:class:`LossEvaluation`. Shapes broadcast: ``x`` may be ``(..., n)`` and the
example may carry a batch of labels ``(...)`` with features ``(..., n)``.

At kinks the minimal-norm subgradient is returned (zero at the hinge margin,
``sign(0) = 0``, zero on the boundary of the insensitive tube, the flatter
branch at the breakpoints of the generalized hinge).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable, NamedTuple

import numpy as np


@dataclass(frozen=True, eq=False)
class LabeledExample:
    """One revealed example: label ``y`` and feature vector ``a``.

    Classification labels must be exactly +1 or -1. Pass ``binary=False``
    for regression targets (absolute and epsilon-insensitive losses take
    arbitrary real targets).
    """

    label: np.ndarray
    features: np.ndarray
    binary: bool = True

    def __post_init__(self):
        y = np.asarray(self.label, dtype=float)
        a = np.atleast_1d(np.asarray(self.features, dtype=float))
        if not np.all(np.isfinite(a)):
            raise ValueError("features must be finite")
        if not np.all(np.isfinite(y)):
            raise ValueError("label must be finite")
        if self.binary and not np.all(np.abs(y) == 1.0):
            raise ValueError(f"label must be +1 or -1, got {y}")
        if y.shape != a.shape[:-1]:
            raise ValueError("label batch shape does not match features")
        object.__setattr__(self, "label", y)
        object.__setattr__(self, "features", a)

    @property
    def dim(self) -> int:
        return self.features.shape[-1]


class LossEvaluation(NamedTuple):
    value: np.ndarray
    subgradient: np.ndarray


LossFn = Callable[[np.ndarray, LabeledExample], LossEvaluation]


def _check(x, ex: LabeledExample) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != ex.dim:
        raise ValueError(f"dimension mismatch: x has {x.shape[-1]}, features have {ex.dim}")
    return x


def _inner(a, x):
    return np.sum(a * x, axis=-1)


def hinge(x, ex: LabeledExample) -> LossEvaluation:
    """``max(0, 1 - y <a, x>)``."""
    x = _check(x, ex)
    y, a = ex.label, ex.features
    margin = y * _inner(a, x)
    active = margin < 1.0
    value = np.maximum(0.0, 1.0 - margin)
    grad = np.where(active[..., None], -y[..., None] * a, 0.0)
    return LossEvaluation(value, np.broadcast_to(grad, np.broadcast_shapes(grad.shape, x.shape)))


def generalized_hinge(x, ex: LabeledExample, alpha: float) -> LossEvaluation:
    """Three-branch hinge with slope ``alpha > 1`` on misclassified points."""
    if not alpha > 1.0:
        raise ValueError("generalized hinge requires alpha > 1")
    x = _check(x, ex)
    y, a = ex.label, ex.features
    margin = y * _inner(a, x)
    value = np.where(margin <= 0.0, 1.0 - alpha * margin, np.maximum(0.0, 1.0 - margin))
    # slope multiplier on -y*a; breakpoints take the flatter side
    slope = np.where(margin < 0.0, alpha, np.where(margin < 1.0, 1.0, 0.0))
    grad = -(slope * y)[..., None] * a
    return LossEvaluation(value, np.broadcast_to(grad, np.broadcast_shapes(grad.shape, x.shape)))


def absolute_loss(x, ex: LabeledExample) -> LossEvaluation:
    """``|y - <a, x>|``."""
    x = _check(x, ex)
    resid = ex.label - _inner(ex.features, x)
    grad = -np.sign(resid)[..., None] * ex.features
    return LossEvaluation(np.abs(resid), np.broadcast_to(grad, np.broadcast_shapes(grad.shape, x.shape)))


def eps_insensitive(x, ex: LabeledExample, eps: float) -> LossEvaluation:
    """``max(|y - <a, x>| - eps, 0)``."""
    if not eps > 0.0:
        raise ValueError("eps-insensitive loss requires eps > 0")
    x = _check(x, ex)
    resid = ex.label - _inner(ex.features, x)
    outside = np.abs(resid) > eps
    value = np.maximum(np.abs(resid) - eps, 0.0)
    grad = np.where(outside[..., None], -np.sign(resid)[..., None] * ex.features, 0.0)
    return LossEvaluation(value, np.broadcast_to(grad, np.broadcast_shapes(grad.shape, x.shape)))


def ridge_augment(base: LossEvaluation, x, lam: float) -> LossEvaluation:
    """Add ``(lam/2)||x||^2``; the result is ``lam``-strongly convex."""
    if lam < 0:
        raise ValueError("ridge coefficient must be nonnegative")
    if lam == 0:
        return base
    x = np.asarray(x, dtype=float)
    return LossEvaluation(
        base.value + 0.5 * lam * np.sum(x * x, axis=-1),
        base.subgradient + lam * x,
    )


def ridged(loss: LossFn, lam: float) -> LossFn:
    """Wrap ``loss`` so every evaluation is ridge-augmented."""
    if lam < 0:
        raise ValueError("ridge coefficient must be nonnegative")

    def evaluate(x, ex):
        return ridge_augment(loss(x, ex), x, lam)

    return evaluate


LOSSES = {
    "hinge": hinge,
    "generalized_hinge": generalized_hinge,
    "absolute": absolute_loss,
    "eps_insensitive": eps_insensitive,
}


def make_loss(name: str, lam: float = 0.0, **params) -> LossFn:
    """Look up a loss by name, binding its parameters and optional ridge term."""
    try:
        fn = LOSSES[name]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; choose from {sorted(LOSSES)}") from None
    fn = partial(fn, **params) if params else fn
    return ridged(fn, lam) if lam else fn
