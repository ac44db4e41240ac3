"""Dense decision vectors and axis-aligned feasible boxes.

All functions accept arrays with arbitrary leading batch axes; the last
axis is the coordinate axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_vector(x, n: int | None = None) -> np.ndarray:
    """Validate and convert ``x`` to a float64 array of shape ``(..., n)``."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if not np.all(np.isfinite(v)):
        raise ValueError("decision vector has non-finite entries")
    if n is not None and v.shape[-1] != n:
        raise ValueError(f"dimension mismatch: expected {n}, got {v.shape[-1]}")
    return v


@dataclass(frozen=True, eq=False)
class BoxSet:
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        lo, hi = np.broadcast_arrays(lo, hi)
        if lo.ndim != 1:
            raise ValueError("box bounds must be one-dimensional")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper in every coordinate")
        if not np.linalg.norm(hi - lo) > 0:
            raise ValueError("box has zero diameter")
        lo, hi = lo.copy(), hi.copy()
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "BoxSet":
        return cls(np.full(n, lo), np.full(n, hi))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def diameter(self) -> float:
        return diameter(self)

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def sample(self, rng: np.random.Generator, size=()) -> np.ndarray:
        """Uniform samples of shape ``size + (n,)``."""
        if isinstance(size, int):
            size = (size,)
        return rng.uniform(self.lower, self.upper, size=tuple(size) + (self.dim,))

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __eq__(self, other):
        if not isinstance(other, BoxSet):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


def project(box: BoxSet, x) -> np.ndarray:
    """Euclidean projection onto the box (coordinatewise clamp)."""
    x = as_vector(x, box.dim)
    return np.clip(x, box.lower, box.upper)


def diameter(box: BoxSet) -> float:
    """Length of the box diagonal, the smallest R with ``||x - y|| <= R`` on the box."""
    return float(np.linalg.norm(box.upper - box.lower))
