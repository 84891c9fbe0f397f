"""Deterministic simulation harness for online policy optimization with an
unknown, time-varying residual: accumulator-based policy updates, online
parameter estimation, and a regret/stability metrics suite.
"""

from .errors import ConfigError, InvalidSpecError, OracleFailureError, RunAbortError
from .estimators import EstSettings
from .features import Linear, Polynomial, Sinusoid, Tanh
from .noise import NoiseLaw
from .optimizers import AlgSettings
from .schedule import Constant, PiecewiseConstant
from .schedule import Sinusoid as SinusoidSchedule
from .sets import All, Ball, Box, project
from .simulate import TrajectoryRecord, extract_zeta, replay_exact, run_meta, w_sequence
from .system import CostWeights, SystemSpec

__all__ = [
    "AlgSettings",
    "All",
    "Ball",
    "Box",
    "ConfigError",
    "Constant",
    "CostWeights",
    "EstSettings",
    "InvalidSpecError",
    "Linear",
    "NoiseLaw",
    "OracleFailureError",
    "PiecewiseConstant",
    "Polynomial",
    "RunAbortError",
    "Sinusoid",
    "SinusoidSchedule",
    "SystemSpec",
    "Tanh",
    "TrajectoryRecord",
    "extract_zeta",
    "project",
    "replay_exact",
    "run_meta",
    "w_sequence",
]

__version__ = "0.1.0"
