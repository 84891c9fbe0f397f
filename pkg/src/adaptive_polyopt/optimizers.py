"""Online policy optimizers: the accumulator method, its buffer-truncated
baseline, and projected gradient descent with an injected bias.

All optimizer state is passed in and returned as values; updates are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .derivatives import GhatJac, HhatGrad, ghat_jacobians, hhat_gradients
from .errors import InvalidSpecError, RunAbortError
from .sets import project
from .system import SystemSpec

MGAPS = "mgaps"
GAPS_BUFFERED = "gaps_buffered"
BIASED_OGD = "biased_ogd"
ALG_KINDS = (MGAPS, GAPS_BUFFERED, BIASED_OGD)


@dataclass(frozen=True)
class AlgSettings:
    """Optimizer selection plus its tuning knobs."""

    kind: str = MGAPS
    eta: float = 0.05
    buffer: int = 1
    bias: float = 0.0
    eps_theta: Optional[float] = None
    theta0: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ALG_KINDS:
            raise InvalidSpecError(f"unknown optimizer kind {self.kind!r}")
        if self.eta < 0:
            raise InvalidSpecError("eta must be >= 0")
        if self.kind == GAPS_BUFFERED and self.buffer < 1:
            raise InvalidSpecError("buffer length B must be >= 1")


@dataclass(frozen=True)
class MgapsState:
    """Accumulator of chain-rule products; size depends only on (n, d)."""

    y: np.ndarray
    eta: float

    @classmethod
    def initial(cls, spec: SystemSpec, eta: float) -> "MgapsState":
        return cls(y=np.zeros((spec.n, spec.d)), eta=float(eta))


@dataclass(frozen=True)
class BufferEntry:
    gj: GhatJac
    hg: HhatGrad
    x: np.ndarray
    theta: np.ndarray


@dataclass(frozen=True)
class GapsBufferState:
    """Ring of the last B per-step Jacobians; products formed on demand."""

    buffer: Tuple[BufferEntry, ...]
    capacity: int
    eta: float

    @classmethod
    def initial(cls, capacity: int, eta: float) -> "GapsBufferState":
        if capacity < 1:
            raise InvalidSpecError("buffer length B must be >= 1")
        return cls(buffer=(), capacity=int(capacity), eta=float(eta))


@dataclass(frozen=True)
class AlgStepOut:
    theta_next: np.ndarray
    g_approx: np.ndarray
    state_next: object = field(repr=False)


def _check_finite(g: np.ndarray, t: int, label: str) -> None:
    if not np.all(np.isfinite(g)):
        raise RunAbortError(t, f"non-finite {label}")


def mgaps_update(spec: SystemSpec, x, theta, a_hat, t: int, st: MgapsState) -> AlgStepOut:
    """One accumulator step.

    The gradient approximation uses the pre-update accumulator, then the
    accumulator advances and the parameter takes a projected step.
    """
    gj = ghat_jacobians(spec, x, theta, a_hat, t)
    hg = hhat_gradients(spec, x, theta, a_hat, t)
    g = hg.d_x @ st.y + hg.d_theta
    _check_finite(g, t, "gradient approximation")
    y_next = gj.d_x @ st.y + gj.d_theta
    theta_next = project(spec.theta_set, theta - st.eta * g)
    return AlgStepOut(theta_next, g, MgapsState(y=y_next, eta=st.eta))


def gaps_buffered_update(
    spec: SystemSpec, x, theta, a_hat, t: int, st: GapsBufferState
) -> AlgStepOut:
    """Truncated-history baseline: keep the newest B one-step Jacobians and
    rebuild the chain-rule sum each step (O(B) work)."""
    gj = ghat_jacobians(spec, x, theta, a_hat, t)
    hg = hhat_gradients(spec, x, theta, a_hat, t)
    total = hg.d_theta.copy()
    v = hg.d_x
    for entry in reversed(st.buffer):
        total = total + v @ entry.gj.d_theta
        v = v @ entry.gj.d_x
    _check_finite(total, t, "truncated gradient approximation")
    theta_next = project(spec.theta_set, theta - st.eta * total)
    new_buffer = (st.buffer + (BufferEntry(gj, hg, np.array(x), np.array(theta)),))[-st.capacity:]
    return AlgStepOut(theta_next, total, GapsBufferState(new_buffer, st.capacity, st.eta))


def biased_ogd_update(theta, grad, bias, eta: float, cset) -> np.ndarray:
    """Projected gradient step on grad + bias."""
    theta = np.asarray(theta, dtype=float)
    return project(cset, theta - eta * (np.asarray(grad, dtype=float) + np.asarray(bias, dtype=float)))
