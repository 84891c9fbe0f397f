"""Online parameter estimators and the trajectory-dependent mismatch measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidSpecError
from .sets import as_vector, project
from .system import SystemSpec, feature_matrix, residual, residual_x_jacobian

GRADIENT = "gradient"
ORACLE = "oracle"
FROZEN = "frozen"
EST_KINDS = (GRADIENT, ORACLE, FROZEN)


@dataclass(frozen=True)
class EstSettings:
    kind: str = ORACLE
    iota: Optional[float] = None  # None: use default_iota at run time
    frozen_offset: float = 0.0
    a0: Optional[list] = None
    feature_norm_bound: float = 1.0  # the D-hat entering the default tuning

    def __post_init__(self):
        if self.kind not in EST_KINDS:
            raise InvalidSpecError(f"unknown estimator kind {self.kind!r}")
        if self.iota is not None and self.iota < 0:
            raise InvalidSpecError("iota must be >= 0")
        if not self.feature_norm_bound > 0:
            raise InvalidSpecError("feature_norm_bound must be positive")


@dataclass(frozen=True)
class EstState:
    a_hat: np.ndarray
    iota: float


def default_iota(c_p: float, horizon: int, feature_norm_bound: float) -> float:
    """Step size sqrt(3*C_p/T) / (2*D^2), capped at 0.1.

    ``c_p`` is 1 plus the schedule path length; ``feature_norm_bound`` caps
    ||phi(x)|| on the states the run visits.
    """
    if horizon <= 0:
        return 0.1
    d2 = max(feature_norm_bound, 1e-12) ** 2
    return min(0.1, math.sqrt(3.0 * c_p / horizon) / (2.0 * d2))


def grad_est_update(spec: SystemSpec, x, f_tilde, st: EstState) -> EstState:
    """Projected gradient step on the observed squared prediction error.

    For the linear-in-parameter residual the loss gradient is
    2 * Phi(x)^T (Phi(x) a_hat - f_tilde).
    """
    x = as_vector(x, spec.n, "x")
    f_tilde = as_vector(f_tilde, spec.k, "f_tilde")
    phi = feature_matrix(spec, x)
    grad = 2.0 * phi.T @ (phi @ st.a_hat - f_tilde)
    a_next = project(spec.a_set, st.a_hat - st.iota * grad)
    return EstState(a_hat=a_next, iota=st.iota)


def oracle_est(spec: SystemSpec, t: int) -> np.ndarray:
    """The exact schedule value; realizes the ideal exact-parameter run."""
    return spec.a_star(t)


def frozen_est(spec: SystemSpec, offset: float) -> np.ndarray:
    """Initial schedule value shifted by a constant offset, projected into A."""
    return project(spec.a_set, spec.a_star(0) + float(offset))


def mismatches(spec: SystemSpec, x, a_hat, a_star, t: int = 0):
    """Zeroth- and first-order model mismatches on the current state.

    Returns (||f(x,a_hat) - f(x,a_star)||, Frobenius norm of the x-Jacobian
    difference)."""
    x = as_vector(x, spec.n, "x")
    eps0 = float(np.linalg.norm(residual(spec, x, a_hat, t) - residual(spec, x, a_star, t)))
    jac_diff = residual_x_jacobian(spec, x, a_hat) - residual_x_jacobian(spec, x, a_star)
    eps1 = float(np.linalg.norm(jac_diff, ord="fro"))
    return eps0, eps1
