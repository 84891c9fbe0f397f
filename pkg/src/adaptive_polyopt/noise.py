"""Bounded zero-mean noise laws for disturbances and observation errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidSpecError
from .rng import Xoshiro256pp

UNIFORM_BOX = "uniform_box"
TRUNCATED_GAUSSIAN = "truncated_gaussian"

_MAX_REJECTION_TRIES = 100_000


def _std_normal_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _std_normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class NoiseLaw:
    """Samples with norm <= bound and zero conditional mean.

    ``cov_floor`` is informational (the per-coordinate variance floor used in
    theorem right-hand sides); when omitted it is filled in analytically where
    a closed form exists.
    """

    bound: float
    distribution: str = UNIFORM_BOX
    sigma: Optional[float] = None
    cov_floor: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "bound", float(self.bound))
        if self.bound < 0 or not math.isfinite(self.bound):
            raise InvalidSpecError("noise bound must be finite and nonnegative")
        if self.distribution not in (UNIFORM_BOX, TRUNCATED_GAUSSIAN):
            raise InvalidSpecError(f"unknown noise distribution {self.distribution!r}")
        if self.distribution == TRUNCATED_GAUSSIAN:
            if self.sigma is None or float(self.sigma) <= 0:
                raise InvalidSpecError("truncated_gaussian requires sigma > 0")
            object.__setattr__(self, "sigma", float(self.sigma))
        elif self.sigma is not None:
            raise InvalidSpecError("sigma only applies to truncated_gaussian")
        if self.cov_floor is not None:
            object.__setattr__(self, "cov_floor", float(self.cov_floor))

    def coordinate_variance(self, dim: int) -> float:
        """Analytic per-coordinate variance; the covariance floor c * bound^2."""
        if self.cov_floor is not None:
            return self.cov_floor
        if self.bound == 0.0:
            return 0.0
        if self.distribution == UNIFORM_BOX:
            half = self.bound / math.sqrt(dim)
            return half * half / 3.0
        if dim == 1:
            alpha = self.bound / self.sigma
            shrink = 2.0 * alpha * _std_normal_pdf(alpha) / (2.0 * _std_normal_cdf(alpha) - 1.0)
            return self.sigma**2 * (1.0 - shrink)
        # Vector-norm truncation has no simple closed form; callers needing a
        # floor for dim > 1 gaussians must set cov_floor explicitly.
        return 0.0

    def sample(self, rng: Xoshiro256pp, dim: int) -> np.ndarray:
        if self.bound == 0.0:
            return np.zeros(dim)
        if self.distribution == UNIFORM_BOX:
            half = self.bound / math.sqrt(dim)
            return np.array([rng.uniform(-half, half) for _ in range(dim)])
        for _ in range(_MAX_REJECTION_TRIES):
            draw = np.array([rng.normal(self.sigma) for _ in range(dim)])
            if float(np.linalg.norm(draw)) <= self.bound:
                return draw
        raise InvalidSpecError(
            "truncated_gaussian rejection failed; sigma is far larger than bound"
        )
