"""Projectable convex feasible sets: boxes, Euclidean balls, all of R^n."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidSpecError


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array, checking dimension if given."""
    if type(x) is np.ndarray and x.dtype == np.float64 and x.ndim == 1:
        v = x  # already in canonical form; skip the copy, keep the checks
    else:
        v = np.atleast_1d(np.asarray(x, dtype=float))
        if v.ndim != 1:
            raise InvalidSpecError(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InvalidSpecError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if v.shape[0] == 1:
        if not math.isfinite(v[0]):
            raise InvalidSpecError(f"{name} contains non-finite entries")
    elif not np.all(np.isfinite(v)):
        raise InvalidSpecError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", as_vector(self.lo, name="Box.lo"))
        object.__setattr__(self, "hi", as_vector(self.hi, self.lo.shape[0], "Box.hi"))
        if np.any(self.lo > self.hi):
            raise InvalidSpecError("Box requires lo <= hi elementwise")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def project(self, point: np.ndarray) -> np.ndarray:
        return np.clip(point, self.lo, self.hi)

    def contains(self, point: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(point >= self.lo - tol) and np.all(point <= self.hi + tol))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, name="Ball.center"))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise InvalidSpecError("Ball radius must be positive and finite")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, point: np.ndarray) -> np.ndarray:
        offset = point - self.center
        dist = float(np.linalg.norm(offset))
        if dist <= self.radius:
            return np.array(point, dtype=float)
        return self.center + offset * (self.radius / dist)

    def contains(self, point: np.ndarray, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(point - self.center)) <= self.radius + tol

    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class All:
    dim: int = field(default=1)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidSpecError("All requires a positive dimension")
        object.__setattr__(self, "dim", int(self.dim))

    def project(self, point: np.ndarray) -> np.ndarray:
        return np.array(point, dtype=float)

    def contains(self, point: np.ndarray, tol: float = 0.0) -> bool:
        return True

    def diameter(self) -> float:
        return float("inf")


ConvexSet = Union[Box, Ball, All]


def project(cset: ConvexSet, point) -> np.ndarray:
    """Euclidean projection onto ``cset``; result always lies in the set."""
    p = as_vector(point, cset.dim, "point")
    return cset.project(p)
