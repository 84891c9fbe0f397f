"""The outer simulation loop, its exact-parameter replay, and the extraction
of equivalent update perturbations.

Each step follows the same fixed order: decide the input, incur the cost,
update the policy parameter, evolve the system, observe the residual, update
the estimate.  Disturbances and observation noise come from separate
substreams of one seed, so changing the observation law never changes the
disturbance realization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidSpecError, RunAbortError
from .estimators import (
    EstSettings,
    EstState,
    FROZEN,
    GRADIENT,
    ORACLE,
    default_iota,
    frozen_est,
    grad_est_update,
    mismatches,
    oracle_est,
)
from .optimizers import (
    AlgSettings,
    AlgStepOut,
    BIASED_OGD,
    GAPS_BUFFERED,
    GapsBufferState,
    MGAPS,
    MgapsState,
    biased_ogd_update,
    gaps_buffered_update,
    mgaps_update,
)
from .rng import Xoshiro256pp
from .schedule import path_length
from .sets import as_vector, project
from .surrogate import DIVERGENCE_LIMIT, surrogate_grad
from .system import SystemSpec, observe_residual, policy_input, residual, stage_cost, step_with

log = logging.getLogger(__name__)

W_STREAM = 0
OBS_STREAM = 1


@dataclass(frozen=True)
class JointState:
    """System state, derivative accumulator, and policy parameter."""

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray


@dataclass
class TrajectoryRecord:
    """Per-step log of one run; re-running the same seed reproduces it bit-for-bit."""

    xs: np.ndarray
    ys: np.ndarray
    thetas: np.ndarray
    a_hats: np.ndarray
    a_stars: np.ndarray
    us: np.ndarray
    f_tildes: np.ndarray
    costs: np.ndarray
    eps0: np.ndarray
    eps1: np.ndarray
    g_approx: np.ndarray
    est_loss: np.ndarray
    ws: np.ndarray
    theta_final: np.ndarray
    seed: int
    spec: SystemSpec = field(repr=False)
    alg: AlgSettings = field(repr=False)
    est: EstSettings = field(repr=False)
    config_hash: str = ""
    zeta_norms: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.xs.shape[0]


def w_sequence(spec: SystemSpec, seed: int) -> np.ndarray:
    """The disturbance realization of a seed, regenerated from its substream."""
    rng = Xoshiro256pp.from_seed(seed, W_STREAM)
    return np.array([spec.w_law.sample(rng, spec.n) for _ in range(spec.horizon)]).reshape(
        spec.horizon, spec.n
    )


def _initial_theta(spec: SystemSpec, alg: AlgSettings) -> np.ndarray:
    if alg.theta0 is not None:
        theta0 = project(spec.theta_set, np.full(spec.d, float(alg.theta0)))
    else:
        theta0 = project(spec.theta_set, spec.cost.theta_bar)
    return theta0


def _initial_estimate(spec: SystemSpec, est: EstSettings) -> np.ndarray:
    if est.kind == ORACLE:
        return oracle_est(spec, 0)
    if est.kind == FROZEN:
        return frozen_est(spec, est.frozen_offset)
    if est.a0 is not None:
        return project(spec.a_set, as_vector(est.a0, spec.p, "est.a0"))
    return project(spec.a_set, np.zeros(spec.p))


def resolve_iota(spec: SystemSpec, est: EstSettings) -> float:
    if est.iota is not None:
        return est.iota
    c_p = 1.0 + path_length(spec.schedule, spec.horizon)
    return default_iota(c_p, spec.horizon, est.feature_norm_bound)


def _check_finite_state(x: np.ndarray, t: int) -> None:
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > DIVERGENCE_LIMIT):
        raise RunAbortError(t, "state diverged")


def run_meta(
    spec: SystemSpec,
    alg: AlgSettings,
    est: EstSettings,
    seed: int,
    config_hash: str = "",
) -> TrajectoryRecord:
    """Run the full loop for spec.horizon steps and log every step."""
    horizon = spec.horizon
    n, m, k, p, d = spec.n, spec.m, spec.k, spec.p, spec.d
    ws = w_sequence(spec, seed)
    rng_obs = Xoshiro256pp.from_seed(seed, OBS_STREAM)

    state = JointState(x=spec.x0, y=np.zeros((n, d)), theta=_initial_theta(spec, alg))
    a_hat = _initial_estimate(spec, est)
    iota = resolve_iota(spec, est)

    if alg.kind == MGAPS:
        alg_state = MgapsState.initial(spec, alg.eta)
    elif alg.kind == GAPS_BUFFERED:
        alg_state = GapsBufferState.initial(alg.buffer, alg.eta)
    else:
        alg_state = None
    bias_vec = np.full(d, alg.bias)

    rec = {
        "xs": np.zeros((horizon, n)),
        "ys": np.zeros((horizon, n, d)),
        "thetas": np.zeros((horizon, d)),
        "a_hats": np.zeros((horizon, p)),
        "a_stars": np.zeros((horizon, p)),
        "us": np.zeros((horizon, m)),
        "f_tildes": np.zeros((horizon, k)),
        "costs": np.zeros(horizon),
        "eps0": np.zeros(horizon),
        "eps1": np.zeros(horizon),
        "g_approx": np.zeros((horizon, d)),
        "est_loss": np.zeros(horizon),
    }
    step_warnings = 0

    for t in range(horizon):
        x, theta = state.x, state.theta
        a_star = spec.a_star(t)
        f_hat = residual(spec, x, a_hat, t)
        u = policy_input(spec, x, theta, f_hat)
        cost = stage_cost(spec, x, u, theta, t)

        if alg.kind == MGAPS:
            out = mgaps_update(spec, x, theta, a_hat, t, alg_state)
            y_next = out.state_next.y
        elif alg.kind == GAPS_BUFFERED:
            out = gaps_buffered_update(spec, x, theta, a_hat, t, alg_state)
            y_next = state.y
        else:
            grad = surrogate_grad(spec, theta, t, ws)
            theta_next = biased_ogd_update(theta, grad, bias_vec, alg.eta, spec.theta_set)
            out = AlgStepOut(theta_next, grad + bias_vec, None)
            y_next = state.y
        alg_state = out.state_next

        x_next = step_with(spec, x, u, t, ws[t])
        _check_finite_state(x_next, t + 1)

        f_tilde = observe_residual(spec, x, t, rng_obs)
        if est.kind == GRADIENT:
            a_hat_next = grad_est_update(spec, x, f_tilde, EstState(a_hat, iota)).a_hat
        elif est.kind == ORACLE:
            a_hat_next = oracle_est(spec, t + 1)
        else:
            a_hat_next = a_hat

        e0, e1 = mismatches(spec, x, a_hat, a_star, t)
        diff = f_hat - f_tilde
        rec["xs"][t], rec["ys"][t], rec["thetas"][t] = x, state.y, theta
        rec["a_hats"][t], rec["a_stars"][t], rec["us"][t] = a_hat, a_star, u
        rec["f_tildes"][t], rec["costs"][t] = f_tilde, cost
        rec["eps0"][t], rec["eps1"][t] = e0, e1
        rec["g_approx"][t] = out.g_approx
        rec["est_loss"][t] = float(diff @ diff)

        if alg.eps_theta is not None:
            if float(np.linalg.norm(out.theta_next - theta)) > alg.eps_theta:
                step_warnings += 1

        state = JointState(x=x_next, y=y_next, theta=out.theta_next)
        a_hat = a_hat_next

    if step_warnings:
        log.warning(
            "parameter step exceeded eps_theta=%s on %d of %d steps",
            alg.eps_theta,
            step_warnings,
            horizon,
        )

    return TrajectoryRecord(
        **rec,
        ws=ws,
        theta_final=state.theta,
        seed=seed,
        spec=spec,
        alg=alg,
        est=est,
        config_hash=config_hash,
    )


def replay_exact(spec: SystemSpec, theta_seq: np.ndarray, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Re-run a realized parameter sequence with exact model parameters.

    Uses the same disturbance substream as the paired run, so differences to
    the run isolate the effect of inexact estimates.
    """
    theta_seq = np.asarray(theta_seq, dtype=float).reshape(-1, spec.d)
    horizon = theta_seq.shape[0]
    if horizon > spec.horizon:
        raise InvalidSpecError("theta sequence is longer than the spec horizon")
    from .derivatives import ghat_jacobians

    ws = w_sequence(spec, seed)
    xs = np.zeros((horizon, spec.n))
    ys = np.zeros((horizon, spec.n, spec.d))
    x = spec.x0
    y = np.zeros((spec.n, spec.d))
    for t in range(horizon):
        theta = theta_seq[t]
        if not spec.theta_set.contains(theta, tol=1e-9):
            raise InvalidSpecError(f"replayed theta at t={t} lies outside the feasible set")
        xs[t], ys[t] = x, y
        f_star = residual(spec, x, spec.a_star(t), t)
        u = policy_input(spec, x, theta, f_star)
        gj = ghat_jacobians(spec, x, theta, spec.a_star(t), t)
        y = gj.d_x @ y + gj.d_theta
        x = step_with(spec, x, u, t, ws[t])
        _check_finite_state(x, t + 1)
    return xs, ys


def extract_zeta(spec: SystemSpec, record: TrajectoryRecord, replay: Tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """Per-step additive perturbations that reproduce the run's parameters
    from one exact-parameter update at the replayed state."""
    replay_xs, replay_ys = replay
    horizon = len(record)
    if replay_xs.shape[0] != horizon:
        raise InvalidSpecError("record and replay lengths differ")
    zetas = np.zeros((horizon, spec.d))
    for t in range(horizon):
        st = MgapsState(y=replay_ys[t], eta=record.alg.eta)
        ideal = mgaps_update(spec, replay_xs[t], record.thetas[t], spec.a_star(t), t, st)
        actual_next = record.thetas[t + 1] if t + 1 < horizon else record.theta_final
        zetas[t] = actual_next - ideal.theta_next
    return zetas
