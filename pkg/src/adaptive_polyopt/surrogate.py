"""Pathwise surrogate costs: what stage cost a single fixed parameter would
incur at time t, had it been applied from step 0 under exact cancellation and
the same realized disturbances.

Gradients run the accumulator recursion along the fixed-parameter rollout,
which is exact there (no trajectory substitution is involved).  A vectorized
path evaluates the gradient at many (theta_t, t) pairs in lockstep; it is used
by the regret and bias metrics where the one-pair loop would be quadratic.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidSpecError, RunAbortError
from .derivatives import ghat_jacobians, hhat_gradients
from .sets import as_vector
from .system import SystemSpec, policy_input, residual, stage_cost, step_with

DIVERGENCE_LIMIT = 1e9


def _check_state(x: np.ndarray, t: int) -> None:
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > DIVERGENCE_LIMIT):
        raise RunAbortError(t, "fixed-parameter rollout diverged")


def surrogate_cost(spec: SystemSpec, theta, t: int, w_seq: np.ndarray) -> float:
    """F_t(theta) for the realized disturbance sequence."""
    theta = as_vector(theta, spec.d, "theta")
    if not spec.theta_set.contains(theta, tol=1e-9):
        raise InvalidSpecError("theta must lie in the feasible set")
    x = spec.x0
    for tau in range(t):
        u = policy_input(spec, x, theta, residual(spec, x, spec.a_star(tau), tau))
        x = step_with(spec, x, u, tau, w_seq[tau])
        _check_state(x, tau + 1)
    u_t = policy_input(spec, x, theta, residual(spec, x, spec.a_star(t), t))
    return stage_cost(spec, x, u_t, theta, t)


def surrogate_grad(spec: SystemSpec, theta, t: int, w_seq: np.ndarray) -> np.ndarray:
    """Exact gradient of F_t via the accumulator recursion on the rollout.

    Scalar fast path; mirrors surrogate_grad_reference operation for
    operation (the reference composes the public per-step operations)."""
    theta = as_vector(theta, spec.d, "theta")
    if not spec.theta_set.contains(theta, tol=1e-9):
        raise InvalidSpecError("theta must lie in the feasible set")
    q, r, lam = spec.cost.q, spec.cost.r, spec.cost.lam
    theta_bar = spec.cost.theta_bar[0]
    delta, fm = spec.delta, spec.feature_map
    th = theta[0]
    x = spec.x0[0]
    y = 0.0
    for tau in range(t):
        a = spec.a_star(tau)
        y = (1.0 - delta * th) * y - delta * x
        f = float(fm.value(x) @ a)
        u = -f - th * x
        x = x + delta * (u + f) + w_seq[tau, 0]
        if not math.isfinite(x) or abs(x) > DIVERGENCE_LIMIT:
            raise RunAbortError(tau + 1, "fixed-parameter rollout diverged")
    a_t = spec.a_star(t)
    f_t = float(fm.value(x) @ a_t)
    df_t = float(fm.d1(x) @ a_t)
    u_t = -f_t - th * x
    dh_du = 2.0 * r * u_t
    g_x = 2.0 * q * x + dh_du * (-df_t - th)
    g_theta = 2.0 * lam * (th - theta_bar) + dh_du * (-x)
    return np.array([g_x * y + g_theta])


def surrogate_grad_reference(spec: SystemSpec, theta, t: int, w_seq: np.ndarray) -> np.ndarray:
    """Same gradient assembled from the public per-step operations."""
    theta = as_vector(theta, spec.d, "theta")
    if not spec.theta_set.contains(theta, tol=1e-9):
        raise InvalidSpecError("theta must lie in the feasible set")
    x = spec.x0
    y = np.zeros((spec.n, spec.d))
    for tau in range(t):
        gj = ghat_jacobians(spec, x, theta, spec.a_star(tau), tau)
        y = gj.d_x @ y + gj.d_theta
        u = policy_input(spec, x, theta, residual(spec, x, spec.a_star(tau), tau))
        x = step_with(spec, x, u, tau, w_seq[tau])
        _check_state(x, tau + 1)
    hg = hhat_gradients(spec, x, theta, spec.a_star(t), t)
    return hg.d_x @ y + hg.d_theta


def surrogate_grad_series(spec: SystemSpec, theta_seq: np.ndarray, w_seq: np.ndarray) -> np.ndarray:
    """grad F_t(theta_t) for every t, in one lockstep batch.

    Lane t carries the fixed-theta_t rollout; it is read exactly when the
    shared clock reaches t and frozen afterwards, so each lane reproduces the
    one-pair loop.
    """
    horizon = theta_seq.shape[0]
    if horizon == 0:
        return np.zeros((0, spec.d))
    q, r, lam = spec.cost.q, spec.cost.r, spec.cost.lam
    theta_bar = spec.cost.theta_bar[0]
    delta = spec.delta
    fm = spec.feature_map
    th = np.array(theta_seq[:, 0], dtype=float)
    x = np.full(horizon, spec.x0[0])
    y = np.zeros(horizon)
    grads = np.zeros(horizon)
    for tau in range(horizon):
        a = spec.a_star(tau)
        xt, yt, tht = x[tau], y[tau], th[tau]
        f_t = float(fm.value(xt) @ a)
        df_t = float(fm.d1(xt) @ a)
        u_t = -f_t - tht * xt
        dh_du = 2.0 * r * u_t
        g_x = 2.0 * q * xt + dh_du * (-df_t - tht)
        g_theta = 2.0 * lam * (tht - theta_bar) + dh_du * (-xt)
        grads[tau] = g_x * yt + g_theta
        live = slice(tau + 1, horizon)
        if live.start >= horizon:
            break
        xs, ths = x[live], th[live]
        f = fm.value(xs) @ a
        y[live] = (1.0 - delta * ths) * y[live] - delta * xs
        u = -f - ths * xs
        x[live] = xs + delta * (u + f) + w_seq[tau, 0]
        bad = ~np.isfinite(x[live]) | (np.abs(x[live]) > DIVERGENCE_LIMIT)
        if bad.any():
            raise RunAbortError(tau + 1, "fixed-parameter rollout diverged")
    return grads.reshape(horizon, spec.d)


def total_surrogate_cost(spec: SystemSpec, theta, w_seq: np.ndarray, horizon: int) -> float:
    """Sum of F_t(theta) over t = 0 .. horizon-1 in a single rollout."""
    theta = as_vector(theta, spec.d, "theta")
    x = spec.x0
    total = 0.0
    for t in range(horizon):
        u = policy_input(spec, x, theta, residual(spec, x, spec.a_star(t), t))
        total += stage_cost(spec, x, u, theta, t)
        x = step_with(spec, x, u, t, w_seq[t])
        _check_state(x, t + 1)
    return total


def total_surrogate_cost_grid(
    spec: SystemSpec, thetas: np.ndarray, w_seq: np.ndarray, horizon: int
) -> np.ndarray:
    """total_surrogate_cost for a whole grid of scalar gains at once."""
    thetas = np.asarray(thetas, dtype=float)
    q, r, lam = spec.cost.q, spec.cost.r, spec.cost.lam
    theta_bar = spec.cost.theta_bar[0]
    delta = spec.delta
    fm = spec.feature_map
    x = np.full(thetas.shape[0], spec.x0[0])
    totals = np.zeros(thetas.shape[0])
    reg = lam * (thetas - theta_bar) ** 2
    for t in range(horizon):
        a = spec.a_star(t)
        f = fm.value(x) @ a
        u = -f - thetas * x
        totals += q * x * x + r * u * u + reg
        x = x + delta * (u + f) + w_seq[t, 0]
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > DIVERGENCE_LIMIT):
            raise RunAbortError(t + 1, "grid rollout diverged")
    return totals
