"""Scalar feature maps for the residual model, with analytic x-derivatives.

Each map sends a scalar state to a row of ``p`` features; the residual is the
inner product of that row with a parameter vector.  First and second
derivatives are closed-form so mismatch Jacobians and curvature bounds never
need numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidSpecError


def _stack(columns) -> np.ndarray:
    first = np.asarray(columns[0], dtype=float)
    if first.ndim == 0:
        return np.array([float(c) for c in columns])
    return np.stack([np.asarray(c, dtype=float) for c in columns], axis=-1)


@dataclass(frozen=True)
class Linear:
    """phi(x) = x, a single feature."""

    out_dim: int = 1

    def __post_init__(self):
        if self.out_dim != 1:
            raise InvalidSpecError("Linear feature map has exactly one feature")

    def value(self, x) -> np.ndarray:
        return _stack([np.asarray(x, dtype=float)])

    def d1(self, x) -> np.ndarray:
        return _stack([np.ones_like(np.asarray(x, dtype=float))])

    def d2(self, x) -> np.ndarray:
        return _stack([np.zeros_like(np.asarray(x, dtype=float))])


@dataclass(frozen=True)
class Polynomial:
    """phi(x) = (x, x^2, ..., x^degree)."""

    degree: int

    def __post_init__(self):
        if int(self.degree) < 1:
            raise InvalidSpecError("Polynomial degree must be >= 1")
        object.__setattr__(self, "degree", int(self.degree))

    @property
    def out_dim(self) -> int:
        return self.degree

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _stack([x**j for j in range(1, self.degree + 1)])

    def d1(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _stack([j * x ** (j - 1) for j in range(1, self.degree + 1)])

    def d2(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = [np.zeros_like(x)]
        cols += [j * (j - 1) * x ** (j - 2) for j in range(2, self.degree + 1)]
        return _stack(cols)


@dataclass(frozen=True)
class Sinusoid:
    """phi_j(x) = sin(omega_j * x)."""

    frequencies: Sequence[float]

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if not freqs:
            raise InvalidSpecError("Sinusoid needs at least one frequency")
        object.__setattr__(self, "frequencies", freqs)

    @property
    def out_dim(self) -> int:
        return len(self.frequencies)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _stack([np.sin(w * x) for w in self.frequencies])

    def d1(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _stack([w * np.cos(w * x) for w in self.frequencies])

    def d2(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _stack([-w * w * np.sin(w * x) for w in self.frequencies])


@dataclass(frozen=True)
class Tanh:
    """phi_j(x) = tanh(s_j * x)."""

    scales: Sequence[float]

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if not scales:
            raise InvalidSpecError("Tanh needs at least one scale")
        object.__setattr__(self, "scales", scales)

    @property
    def out_dim(self) -> int:
        return len(self.scales)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _stack([np.tanh(s * x) for s in self.scales])

    def d1(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _stack([s * (1.0 - np.tanh(s * x) ** 2) for s in self.scales])

    def d2(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = []
        for s in self.scales:
            th = np.tanh(s * x)
            cols.append(-2.0 * s * s * th * (1.0 - th**2))
        return _stack(cols)


FeatureMap = Union[Linear, Polynomial, Sinusoid, Tanh]


def derivative_sups(fm: FeatureMap, x_lo: float, x_hi: float, num: int = 1001):
    """Grid suprema of ||phi'(x)|| and ||phi''(x)|| over [x_lo, x_hi].

    Multiplied by the parameter-set diameter these give the per-dimension
    bounds on the error function's first and second x-derivatives.
    """
    grid = np.linspace(float(x_lo), float(x_hi), num)
    sup1 = float(np.max(np.linalg.norm(fm.d1(grid), axis=-1)))
    sup2 = float(np.max(np.linalg.norm(fm.d2(grid), axis=-1)))
    return sup1, sup2
