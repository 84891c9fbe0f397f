"""Analytic Jacobians of the estimated one-step dynamics and cost.

The estimated transition treats the current parameter estimate as true:
plugging the cancellation policy into the dynamics makes the residual terms
cancel symbolically, so ``ghat(x, theta) = x + delta * psi(x, theta)`` and its
Jacobians carry no feature-gradient terms.  The estimated stage cost keeps the
estimate inside the control, so its gradients do depend on it.

Central finite differences live here too, as the validation oracle; the
simulation itself never uses them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleFailureError
from .sets import as_vector
from .system import (
    SystemSpec,
    policy_input,
    psi_dtheta,
    psi_dx,
    residual,
    residual_x_jacobian,
)


@dataclass(frozen=True)
class GhatJac:
    """d ghat / dx (n x n) and d ghat / dtheta (n x d) at one point."""

    d_x: np.ndarray
    d_theta: np.ndarray


@dataclass(frozen=True)
class HhatGrad:
    """Gradient rows of the estimated stage cost: d_x (n,) and d_theta (d,)."""

    d_x: np.ndarray
    d_theta: np.ndarray


def ghat_jacobians(spec: SystemSpec, x, theta, a_hat, t: int = 0) -> GhatJac:
    x = as_vector(x, spec.n, "x")
    theta = as_vector(theta, spec.d, "theta")
    eye = np.eye(spec.n)
    d_x = eye + spec.delta * psi_dx(spec, x, theta)
    d_theta = spec.delta * psi_dtheta(spec, x, theta)
    return GhatJac(d_x=d_x, d_theta=d_theta)


def hhat_gradients(spec: SystemSpec, x, theta, a_hat, t: int = 0) -> HhatGrad:
    x = as_vector(x, spec.n, "x")
    theta = as_vector(theta, spec.d, "theta")
    a_hat = as_vector(a_hat, spec.p, "a_hat")
    u = policy_input(spec, x, theta, residual(spec, x, a_hat, t))
    dh_dx = 2.0 * spec.cost.q * x
    dh_du = 2.0 * spec.cost.r * u
    dh_dtheta = 2.0 * spec.cost.lam * (theta - spec.cost.theta_bar)
    du_dx = -residual_x_jacobian(spec, x, a_hat) + psi_dx(spec, x, theta)
    du_dtheta = psi_dtheta(spec, x, theta)
    d_x = dh_dx + dh_du @ du_dx
    d_theta = dh_dtheta + dh_du @ du_dtheta
    return HhatGrad(d_x=d_x, d_theta=d_theta)


def fd_jacobian(fn, point, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of ``fn`` at ``point``, columnwise in h."""
    if not h > 0:
        raise ValueError("step size h must be positive")
    point = as_vector(point, name="point")
    cols = []
    for i in range(point.shape[0]):
        bump = np.zeros_like(point)
        bump[i] = h
        up = np.asarray(fn(point + bump), dtype=float)
        down = np.asarray(fn(point - bump), dtype=float)
        if not (np.all(np.isfinite(up)) and np.all(np.isfinite(down))):
            raise OracleFailureError(f"fn non-finite near coordinate {i}")
        cols.append((up - down) / (2.0 * h))
    return np.stack(cols, axis=-1)


def fd_gradient(fn_scalar, point, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    jac = fd_jacobian(lambda z: np.array([fn_scalar(z)]), point, h)
    return jac[0]
