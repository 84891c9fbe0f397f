"""Evaluation quantities: projected gradients, local and static regret,
gradient bias, mismatch sums, trajectory distances, variation intensities,
and the closed-form theorem right-hand side they are compared against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidSpecError
from .features import derivative_sups
from .schedule import path_length as schedule_path_length
from .schedule import schedule_values
from .sets import All, Ball, Box, as_vector, project
from .surrogate import (
    surrogate_cost,
    surrogate_grad,
    surrogate_grad_series,
    total_surrogate_cost_grid,
)
from .system import SystemSpec

__all__ = [
    "MetricsReport",
    "projected_gradient",
    "pg_norm_sq_series",
    "local_regret",
    "gradient_bias",
    "gradient_bias_series",
    "trajectory_distance",
    "variation_intensities",
    "static_regret",
    "theorem_grad_error_rhs",
    "error_derivative_bounds",
    "surrogate_cost",
    "surrogate_grad",
    "compute_report",
]


@dataclass
class MetricsReport:
    """Aggregated statistics for one run; serializes to the summary JSON."""

    horizon: int
    seed: int
    local_regret: float
    pg_norms_sq: np.ndarray
    sum_eps0: float
    sum_eps1: float
    sum_eps0_sq: float
    sum_eps1_sq: float
    sum_zeta_norm: Optional[float]
    traj_distance: Optional[float]
    path_length: float
    v_w: float
    v_sys: float
    est_loss_sum: float
    total_cost: float
    gradient_bias: Optional[np.ndarray] = None
    static_regret: Optional[float] = None
    static_regret_grid_spacing: Optional[float] = None
    theorem_bound_rhs: Optional[float] = None

    def to_dict(self) -> dict:
        def _ser(v):
            if isinstance(v, np.ndarray):
                return [float(x) for x in v]
            return v

        return {k: _ser(v) for k, v in self.__dict__.items()}


def projected_gradient(theta, grad, eta: float, cset) -> np.ndarray:
    """(theta - Pi(theta - eta*grad)) / eta; equals grad for interior steps."""
    if not eta > 0:
        raise InvalidSpecError("projected gradient requires eta > 0")
    theta = as_vector(theta, name="theta")
    grad = as_vector(grad, theta.shape[0], "grad")
    return (theta - project(cset, theta - eta * grad)) / eta


def pg_norm_sq_series(
    spec: SystemSpec, theta_seq: np.ndarray, eta: float, w_seq: np.ndarray
) -> np.ndarray:
    """Squared projected-gradient norm of F_t at theta_t, for every t."""
    theta_seq = np.asarray(theta_seq, dtype=float).reshape(-1, spec.d)
    grads = surrogate_grad_series(spec, theta_seq, w_seq)
    out = np.zeros(theta_seq.shape[0])
    for t in range(theta_seq.shape[0]):
        pg = projected_gradient(theta_seq[t], grads[t], eta, spec.theta_set)
        out[t] = float(pg @ pg)
    return out


def local_regret(spec: SystemSpec, theta_seq, eta: float, w_seq: np.ndarray) -> float:
    """Cumulative squared projected-gradient norm along the parameter sequence."""
    return float(np.sum(pg_norm_sq_series(spec, theta_seq, eta, w_seq)))


def gradient_bias(spec: SystemSpec, record, t: int) -> float:
    """Distance between the optimizer's step direction and the exact
    fixed-parameter gradient at step t."""
    g_exact = surrogate_grad(spec, record.thetas[t], t, record.ws)
    return float(np.linalg.norm(record.g_approx[t] - g_exact))


def gradient_bias_series(spec: SystemSpec, record) -> np.ndarray:
    grads = surrogate_grad_series(spec, record.thetas, record.ws)
    return np.linalg.norm(record.g_approx - grads, axis=1)


def trajectory_distance(record, replay: Tuple[np.ndarray, np.ndarray]) -> float:
    """Sum over t of ||x_t - x~_t|| + ||y_t - y~_t||."""
    replay_xs, replay_ys = replay
    if replay_xs.shape[0] != len(record):
        raise InvalidSpecError("record and replay lengths differ")
    if len(record) == 0:
        return 0.0
    dx = np.linalg.norm(record.xs - replay_xs, axis=1)
    dy = np.linalg.norm(
        (record.ys - replay_ys).reshape(len(record), -1), axis=1
    )
    return float(np.sum(dx) + np.sum(dy))


def variation_intensities(
    spec: SystemSpec,
    w_seq: np.ndarray,
    x_range: Tuple[float, float] = (-2.0, 2.0),
    grid: int = 101,
) -> Tuple[float, float]:
    """Grid-approximated system variation and exact disturbance variation.

    The time variation of the one-step map comes only through the scheduled
    parameter (the residual folded into the dynamics); for the additive-input
    family the map difference is independent of u, so the X x U sup reduces to
    an X sup.  The policy and cost families carry no explicit time dependence,
    so their sup terms vanish identically.
    """
    horizon = spec.horizon
    xs = np.linspace(x_range[0], x_range[1], grid)
    phi = spec.feature_map.value(xs)  # (grid, p)
    v_sys = 0.0
    a_prev = spec.a_star(0)
    for t in range(1, horizon):
        a_t = spec.a_star(t)
        if not np.array_equal(a_t, a_prev):
            v_sys += spec.delta * float(np.max(np.abs(phi @ (a_t - a_prev))))
        a_prev = a_t
    if w_seq.shape[0] >= 2:
        v_w = float(np.sum(np.linalg.norm(np.diff(w_seq, axis=0), axis=1)))
    else:
        v_w = 0.0
    return v_sys, v_w


def _theta_grid(spec: SystemSpec, resolution: int) -> np.ndarray:
    cset = spec.theta_set
    if isinstance(cset, Box):
        return np.linspace(cset.lo[0], cset.hi[0], resolution)
    if isinstance(cset, Ball):
        return np.linspace(cset.center[0] - cset.radius, cset.center[0] + cset.radius, resolution)
    raise InvalidSpecError("static regret needs a bounded parameter set")


def static_regret(spec: SystemSpec, record, grid_resolution: int = 201) -> Tuple[float, float]:
    """Total cost minus the best fixed parameter's surrogate total on a grid.

    Returns (regret, grid spacing); the minimum is exact only up to the grid.
    """
    if spec.d > 2:
        raise InvalidSpecError("grid search supports at most two parameter dimensions")
    horizon = len(record)
    if horizon == 0:
        return 0.0, 0.0
    thetas = _theta_grid(spec, grid_resolution)
    totals = total_surrogate_cost_grid(spec, thetas, record.ws, horizon)
    spacing = float(thetas[1] - thetas[0]) if thetas.shape[0] > 1 else 0.0
    return float(np.sum(record.costs) - np.min(totals)), spacing


def theorem_grad_error_rhs(
    k: int, sigma_lb: float, eps_bar: float, beta_e: float, gamma_e: float, horizon: int
) -> float:
    """Closed-form bound on the expected total squared gradient loss."""
    if not sigma_lb > 0:
        raise InvalidSpecError("the covariance floor must be positive")
    lead = (2.0 * k / sigma_lb) * (1.0 + gamma_e + beta_e * gamma_e) * eps_bar**3 * horizon
    return lead + 2.0 * k * gamma_e**2 * eps_bar**2 * horizon


def error_derivative_bounds(
    spec: SystemSpec, x_radius: float = 2.0, grid: int = 1001
) -> Tuple[float, float]:
    """Numeric (beta_e, gamma_e): sups of the error function's first and
    second x-derivatives over the state range and the parameter set."""
    sup1, sup2 = derivative_sups(spec.feature_map, -x_radius, x_radius, grid)
    diam = spec.a_set.diameter()
    return sup1 * diam, sup2 * diam


def compute_report(
    spec: SystemSpec,
    record,
    replay: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    zetas: Optional[np.ndarray] = None,
    static_grid: Optional[int] = None,
    with_bias_series: bool = True,
) -> MetricsReport:
    """Assemble the full report for one run."""
    horizon = len(record)
    eta = record.alg.eta
    if horizon > 0 and eta > 0:
        pg_sq = pg_norm_sq_series(spec, record.thetas, eta, record.ws)
    else:
        pg_sq = np.zeros(horizon)
    v_sys, v_w = variation_intensities(spec, record.ws)
    bias_series = None
    if with_bias_series and horizon > 0:
        bias_series = gradient_bias_series(spec, record)
    sr = spacing = None
    if static_grid is not None:
        sr, spacing = static_regret(spec, record, static_grid)
    return MetricsReport(
        horizon=horizon,
        seed=record.seed,
        local_regret=float(np.sum(pg_sq)),
        pg_norms_sq=pg_sq,
        sum_eps0=float(np.sum(record.eps0)),
        sum_eps1=float(np.sum(record.eps1)),
        sum_eps0_sq=float(np.sum(record.eps0**2)),
        sum_eps1_sq=float(np.sum(record.eps1**2)),
        sum_zeta_norm=None if zetas is None else float(np.sum(np.linalg.norm(zetas, axis=1))),
        traj_distance=None if replay is None else trajectory_distance(record, replay),
        path_length=schedule_path_length(spec.schedule, horizon),
        v_w=v_w,
        v_sys=v_sys,
        est_loss_sum=float(np.sum(record.est_loss)),
        total_cost=float(np.sum(record.costs)),
        gradient_bias=bias_series,
        static_regret=sr,
        static_regret_grid_spacing=spacing,
    )
