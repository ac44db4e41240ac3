"""Brute-force references for the closed forms, and comparator construction.

``brute_prox`` and ``brute_minimize`` are deliberately naive grid searches;
they share no code with the closed-form prox and serve as its independent
check. ``hinge_composite_minimizer`` is the analytic per-round minimizer of
the benchmark objectives, usable in any dimension, and is itself certified
against ``brute_minimize`` in low dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from dynregret.regret import ComparatorSequence
from dynregret.regularizers import WeightedL1
from dynregret.vecspace import BoxSet


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution and limits.

    Full grids above ``max_points`` are replaced by a coarse full sweep
    followed by local refinement: a window around the incumbent is searched
    at the finer resolution and re-centred until its argmin is interior,
    which for convex objectives locates the minimizer up to resolution.
    """

    resolution: float = 1e-4
    max_dims: int = 3
    max_points: int = 250_000

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("grid resolution must be positive")
        if not 1 <= self.max_dims <= 3:
            raise ValueError("full grids are limited to at most 3 dimensions")


def _axis(lo: float, hi: float, res: float) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, int(math.ceil((hi - lo) / res)) + 1)


def brute_prox(r: WeightedL1, eta: float, x, box: BoxSet, grid: GridSpec = GridSpec()) -> np.ndarray:
    """Coordinatewise exhaustive search of ``r(u) + ||u - x||^2 / (2 eta)`` over the box."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=float)
    w = np.broadcast_to(r.weights, x.shape)
    out = np.empty_like(x)
    for i in range(x.shape[-1]):
        g = _axis(box.lower[i], box.upper[i], grid.resolution)
        obj = r.rho * w[i] * np.abs(g) + (g - x[i]) ** 2 / (2 * eta)
        out[i] = g[np.argmin(obj)]
    return out


def _lexmin(points: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, float]:
    vmin = values.min()
    tie = values <= vmin + 1e-12 * max(1.0, abs(vmin))
    cand = points[tie]
    order = np.lexsort(cand.T[::-1])
    return cand[order[0]], float(vmin)


def _mesh(axes):
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def brute_minimize(objective: Callable[[np.ndarray], np.ndarray], box: BoxSet,
                   grid: GridSpec = GridSpec(), return_value: bool = False):
    """Grid argmin of ``objective`` over the box, ties to the lexicographically smallest point.

    ``objective`` maps a ``(k, n)`` stack of points to ``(k,)`` values.
    """
    n = box.dim
    if n > grid.max_dims:
        raise ValueError(f"grid oracle refuses dimension {n} > {grid.max_dims}")
    lo, hi = box.lower, box.upper
    counts = [len(_axis(lo[i], hi[i], grid.resolution)) for i in range(n)]
    if math.prod(counts) <= grid.max_points:
        pts = _mesh([_axis(lo[i], hi[i], grid.resolution) for i in range(n)])
        best, val = _lexmin(pts, np.asarray(objective(pts), dtype=float))
        return (best, val) if return_value else best

    per_dim = max(3, int(grid.max_points ** (1.0 / n)))
    res = max(float(np.max(hi - lo)) / (per_dim - 1), grid.resolution)
    pts = _mesh([_axis(lo[i], hi[i], res) for i in range(n)])
    best, val = _lexmin(pts, np.asarray(objective(pts), dtype=float))
    while res > grid.resolution:
        res = max(res / 10, grid.resolution)
        half = 0.5 * (per_dim - 1) * res
        best, val = _window_search(objective, lo, hi, best, half, res)
    return (best, val) if return_value else best


def _window_search(objective, lo, hi, center, half, res, max_moves=10_000):
    # slide the window until its argmin is interior (or on the box boundary)
    for _ in range(max_moves):
        wlo = np.maximum(lo, center - half)
        whi = np.minimum(hi, center + half)
        pts = _mesh([_axis(wlo[i], whi[i], res) for i in range(len(lo))])
        best, val = _lexmin(pts, np.asarray(objective(pts), dtype=float))
        edge = ((best <= wlo + 0.5 * res) & (wlo > lo)) | ((best >= whi - 0.5 * res) & (whi < hi))
        if not np.any(edge):
            return best, val
        center = best
    raise RuntimeError("grid refinement did not settle")


def comparator_from_minimizers(losses: Iterable, box: BoxSet, grid: GridSpec = GridSpec()) -> ComparatorSequence:
    """Per-round grid minimizers of a sequence of round objectives."""
    pts = [brute_minimize(F, box, grid) for F in losses]
    return ComparatorSequence(np.array(pts), "per_round_minimizer")


# ---------------------------------------------------------------------------
# analytic minimizer of hinge + ridge + weighted l1 over a box


def _soft(v, s):
    return np.sign(v) * np.maximum(np.abs(v) - s, 0.0)


def hinge_composite_minimizer(s, c, lam: float, box: BoxSet, iters: int = 64) -> np.ndarray:
    """Minimize ``max(0, 1 - <s, x>) + lam/2 ||x||^2 + sum_i c_i |x_i|`` over the box.

    ``s`` is the signed feature ``y * a``; ``c`` holds the per-coordinate
    l1 thresholds ``rho * w``. Leading axes of ``s`` and ``c`` are batch axes.

    With ``lam > 0`` the minimizer is ``x(theta) = clip(soft(theta s, c)/lam)``
    where ``theta`` in [0, 1] is the hinge multiplier; ``<s, x(theta)>`` is
    nondecreasing, so ``theta`` is found by bisection on the margin. With
    ``lam = 0`` the problem is a fractional knapsack: margin is bought from
    the coordinates with the lowest cost ratio ``c_i / |s_i|`` below one.
    """
    s = np.asarray(s, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), s.shape)
    lo, hi = box.lower, box.upper
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam > 0:
        def x_of(theta):
            return np.clip(_soft(theta[..., None] * s, c) / lam, lo, hi)

        shape = s.shape[:-1]
        a = np.zeros(shape)
        b = np.ones(shape)
        h0 = np.sum(s * x_of(a), axis=-1)
        h1 = np.sum(s * x_of(b), axis=-1)
        for _ in range(iters):
            mid = 0.5 * (a + b)
            below = np.sum(s * x_of(mid), axis=-1) < 1.0
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        theta = np.where(h0 >= 1.0, 0.0, np.where(h1 <= 1.0, 1.0, b))
        return x_of(theta)

    base = np.clip(0.0, lo, hi) * np.ones_like(s)
    deficit = 1.0 - np.sum(s * base, axis=-1)
    room = np.where(s > 0, hi - base, np.where(s < 0, base - lo, 0.0))
    abs_s = np.abs(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(abs_s > 0, c / abs_s, np.inf)
    cap = np.where(rate < 1.0, abs_s * room, 0.0)
    order = np.argsort(rate, axis=-1, kind="stable")
    cap_sorted = np.take_along_axis(cap, order, axis=-1)
    before = np.cumsum(cap_sorted, axis=-1) - cap_sorted
    take_sorted = np.clip(deficit[..., None] - before, 0.0, cap_sorted)
    take = np.empty_like(take_sorted)
    np.put_along_axis(take, order, take_sorted, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        move = np.where(abs_s > 0, take / abs_s, 0.0)
    return np.clip(base + np.sign(s) * move, lo, hi)


def hinge_composite_value(x, s, c, lam: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (np.maximum(0.0, 1.0 - np.sum(s * x, axis=-1)) + 0.5 * lam * np.sum(x * x, axis=-1)
            + np.sum(c * np.abs(x), axis=-1))


# ---------------------------------------------------------------------------
# best fixed point in hindsight


def averaged_objective(loss, examples, thresholds, chunk: int = 4_000_000):
    """``u -> mean_t F_t(u)`` over a recorded run, vectorized over candidate points.

    ``examples`` is a batched :class:`~dynregret.losses.LabeledExample` with
    one entry per round and ``thresholds`` the per-round ``rho * w`` of shape
    ``(T, n)``.
    """
    T = thresholds.shape[0]
    step = max(1, chunk // T)

    def value(points):
        points = np.asarray(points, dtype=float)
        out = np.empty(points.shape[0])
        for i in range(0, points.shape[0], step):
            p = points[i:i + step, None, :]
            f = loss(p, examples).value + np.sum(thresholds * np.abs(p), axis=-1)
            out[i:i + step] = f.mean(axis=1)
        return out

    return value


def best_fixed_point(loss, examples, thresholds, box: BoxSet, grid: GridSpec = GridSpec()) -> np.ndarray:
    return brute_minimize(averaged_objective(loss, examples, thresholds), box, grid)
