"""True-parameter schedules: how the unknown model parameter moves over time."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import InvalidSpecError
from .sets import as_vector


@dataclass(frozen=True)
class Constant:
    value_vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value_vec", as_vector(self.value_vec, name="Constant.value"))

    @property
    def dim(self) -> int:
        return self.value_vec.shape[0]

    def value(self, t: int) -> np.ndarray:
        return self.value_vec


@dataclass(frozen=True)
class PiecewiseConstant:
    switch_times: Sequence[int]
    values: Sequence[np.ndarray]

    def __post_init__(self):
        times = [int(s) for s in self.switch_times]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidSpecError("switch_times must be strictly increasing")
        vals = [as_vector(v, name="PiecewiseConstant.values[i]") for v in self.values]
        if len(vals) != len(times) + 1:
            raise InvalidSpecError(
                f"need len(values) == len(switch_times)+1, got {len(vals)} and {len(times)}"
            )
        if any(v.shape != vals[0].shape for v in vals):
            raise InvalidSpecError("all schedule values must share one dimension")
        object.__setattr__(self, "switch_times", tuple(times))
        object.__setattr__(self, "values", tuple(vals))

    @property
    def dim(self) -> int:
        return self.values[0].shape[0]

    def value(self, t: int) -> np.ndarray:
        return self.values[bisect.bisect_right(self.switch_times, t)]


@dataclass(frozen=True)
class Sinusoid:
    base: np.ndarray
    amplitude: np.ndarray
    period: float

    def __post_init__(self):
        base = as_vector(self.base, name="Sinusoid.base")
        amp = as_vector(self.amplitude, base.shape[0], "Sinusoid.amplitude")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "period", float(self.period))
        if not self.period > 0:
            raise InvalidSpecError("Sinusoid period must be positive")

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    def value(self, t: int) -> np.ndarray:
        return self.base + self.amplitude * np.sin(2.0 * np.pi * t / self.period)


ParamSchedule = Union[Constant, PiecewiseConstant, Sinusoid]


def schedule_values(schedule: ParamSchedule, horizon: int) -> np.ndarray:
    """Stack a_0 .. a_{T-1} into a (T, p) array."""
    if horizon == 0:
        return np.zeros((0, schedule.dim))
    return np.stack([schedule.value(t) for t in range(horizon)])


def path_length(schedule: ParamSchedule, horizon: int) -> float:
    """Total variation sum ||a_t - a_{t-1}|| over t = 1 .. T-1."""
    vals = schedule_values(schedule, horizon)
    if vals.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(vals, axis=0), axis=1)))
