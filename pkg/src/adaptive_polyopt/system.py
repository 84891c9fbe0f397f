"""Problem instances: matched-disturbance dynamics, policy class, costs, noise.

The shipped instance family is the scalar benchmark

    x' = x + delta * (u + phi(x) . a_true) + w,      u = -phi(x) . a_est + psi(x, theta),

with gain policy psi(x, theta) = -theta * x and quadratic stage cost
q*x^2 + r*u^2 + lam*(theta - theta_bar)^2.  A correct parameter estimate
cancels the residual exactly, leaving the closed loop x' = (1 - delta*theta)*x + w.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError
from .features import FeatureMap, derivative_sups
from .noise import NoiseLaw
from .rng import Xoshiro256pp
from .schedule import ParamSchedule, schedule_values
from .sets import ConvexSet, as_vector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostWeights:
    q: float
    r: float
    lam: float
    theta_bar: np.ndarray

    def __post_init__(self):
        for name in ("q", "r", "lam"):
            v = float(getattr(self, name))
            if v < 0 or not math.isfinite(v):
                raise InvalidSpecError(f"cost weight {name} must be finite and >= 0")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "theta_bar", as_vector(self.theta_bar, name="theta_bar"))


@dataclass(frozen=True)
class SystemSpec:
    """Immutable description of one time-varying problem instance."""

    delta: float
    feature_map: FeatureMap
    cost: CostWeights
    theta_set: ConvexSet
    a_set: ConvexSet
    x0: np.ndarray
    w_law: NoiseLaw
    obs_law: NoiseLaw
    schedule: ParamSchedule
    horizon: int
    n: int = 1
    m: int = 1
    k: int = 1
    d: int = 1
    p: int = field(default=0)  # 0 means: take the feature map's output dimension

    def __post_init__(self):
        if (self.n, self.m, self.k, self.d) != (1, 1, 1, 1):
            raise InvalidSpecError("the scalar instance family requires n = m = k = d = 1")
        object.__setattr__(self, "delta", float(self.delta))
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise InvalidSpecError("delta must be positive and finite")
        p = self.feature_map.out_dim
        if self.p not in (0, p):
            raise InvalidSpecError(f"p={self.p} does not match feature map out_dim={p}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x0", as_vector(self.x0, self.n, "x0"))
        object.__setattr__(self, "horizon", int(self.horizon))
        if self.horizon < 0:
            raise InvalidSpecError("horizon must be >= 0")
        if self.theta_set.dim != self.d:
            raise InvalidSpecError("theta_set dimension must equal d")
        if self.a_set.dim != p:
            raise InvalidSpecError("a_set dimension must equal p")
        if not self.theta_set.contains(self.cost.theta_bar, tol=1e-12):
            raise InvalidSpecError("theta_bar must lie in theta_set")
        if self.schedule.dim != p:
            raise InvalidSpecError("schedule dimension must equal p")
        for t, a in enumerate(schedule_values(self.schedule, min(self.horizon, 4096))):
            if not self.a_set.contains(a, tol=1e-9):
                raise InvalidSpecError(f"schedule value at t={t} lies outside a_set")

    def a_star(self, t: int) -> np.ndarray:
        return self.schedule.value(t)


def feature_matrix(spec: SystemSpec, x: np.ndarray) -> np.ndarray:
    """The k x p feature matrix Phi(x); k = 1 for the scalar family."""
    return spec.feature_map.value(x[0]).reshape(spec.k, spec.p)


def residual(spec: SystemSpec, x, a, t: int = 0) -> np.ndarray:
    """Nonlinear residual Phi(x) . a, linear in the parameter."""
    x = as_vector(x, spec.n, "x")
    a = as_vector(a, spec.p, "a")
    return feature_matrix(spec, x) @ a


def residual_x_jacobian(spec: SystemSpec, x, a) -> np.ndarray:
    """d/dx of the residual, a k x n matrix."""
    x = as_vector(x, spec.n, "x")
    a = as_vector(a, spec.p, "a")
    d1 = spec.feature_map.d1(x[0]).reshape(spec.k, spec.p)
    return (d1 @ a).reshape(spec.k, spec.n)


def psi(spec: SystemSpec, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Gain actuation psi(x, theta) = -theta * x."""
    return -theta * x


def psi_dx(spec: SystemSpec, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return (-theta).reshape(spec.m, spec.n)


def psi_dtheta(spec: SystemSpec, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return (-x).reshape(spec.m, spec.d)


def policy_input(spec: SystemSpec, x, theta, f_hat) -> np.ndarray:
    """Control u = -f_hat + psi(x, theta): cancel the residual, then actuate."""
    x = as_vector(x, spec.n, "x")
    theta = as_vector(theta, spec.d, "theta")
    f_hat = as_vector(f_hat, spec.k, "f_hat")
    return -f_hat + psi(spec, x, theta)


def step_with(spec: SystemSpec, x: np.ndarray, u: np.ndarray, t: int, w: np.ndarray) -> np.ndarray:
    """One true transition with an explicit disturbance value."""
    f_star = residual(spec, x, spec.a_star(t), t)
    return x + spec.delta * (u + f_star) + w


def step_true(spec: SystemSpec, x, u, t: int, rng: Xoshiro256pp) -> np.ndarray:
    """One true transition, drawing the disturbance from the w-law."""
    x = as_vector(x, spec.n, "x")
    u = as_vector(u, spec.m, "u")
    w = spec.w_law.sample(rng, spec.n)
    return step_with(spec, x, u, t, w)


def stage_cost(spec: SystemSpec, x, u, theta, t: int = 0) -> float:
    x = as_vector(x, spec.n, "x")
    u = as_vector(u, spec.m, "u")
    theta = as_vector(theta, spec.d, "theta")
    dtheta = theta - spec.cost.theta_bar
    return float(
        spec.cost.q * (x @ x) + spec.cost.r * (u @ u) + spec.cost.lam * (dtheta @ dtheta)
    )


def observe_residual(spec: SystemSpec, x, t: int, rng: Xoshiro256pp) -> np.ndarray:
    """Noisy measurement of the true residual; error norm <= obs bound."""
    x = as_vector(x, spec.n, "x")
    truth = residual(spec, x, spec.a_star(t), t)
    return truth + spec.obs_law.sample(rng, spec.k)


def sanity_warnings(spec: SystemSpec, x_radius: float = 2.0, grid: int = 201) -> list[str]:
    """Numeric configuration checks mirroring the analysis assumptions.

    Returns human-readable warnings (also logged); none of these abort a run.
    """
    msgs = []
    thetas = np.linspace(
        spec.theta_set.project(np.array([-1e9]))[0],
        spec.theta_set.project(np.array([1e9]))[0],
        grid,
    )
    factors = np.abs(1.0 - spec.delta * thetas)
    if float(np.max(factors)) >= 1.0:
        msgs.append(
            "closed loop is not contractive over the whole gain set: "
            f"max |1 - delta*theta| = {float(np.max(factors)):.4f}"
        )
    sup1, sup2 = derivative_sups(spec.feature_map, -x_radius, x_radius)
    diam = spec.a_set.diameter()
    beta_e = sup1 * diam
    gamma_e = sup2 * diam
    caps = [0.25]
    if gamma_e > 0:
        caps += [1.0 / (2.0 * gamma_e), 1.0 / (4.0 * beta_e * gamma_e) if beta_e > 0 else math.inf]
    eps_cap = min(caps)
    if spec.w_law.bound > eps_cap:
        msgs.append(
            f"disturbance bound {spec.w_law.bound:.4g} exceeds the Taylor-regime cap "
            f"{eps_cap:.4g} implied by the feature curvature"
        )
    for m in msgs:
        log.warning("%s", m)
    return msgs
