"""Run configurations: a versioned JSON schema, strict validation with
field-level messages, content hashing, and expansion into (scenario, seed)
cells.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Optional

from . import features, schedule as sched
from .errors import ConfigError, InvalidSpecError
from .estimators import EST_KINDS, EstSettings
from .noise import NoiseLaw, TRUNCATED_GAUSSIAN, UNIFORM_BOX
from .optimizers import ALG_KINDS, AlgSettings
from .sets import All, Ball, Box
from .system import CostWeights, SystemSpec

SCHEMA_VERSION = 1
SWEEP_AXES = ("T", "eta", "iota", "eps_bar", "offset")


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_vec(v) -> bool:
    return isinstance(v, list) and len(v) > 0 and all(_is_num(x) for x in v)


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, path: str, msg: str) -> None:
        self.errors.append(f"{path}: {msg}")

    def known_keys(self, obj: dict, path: str, allowed: set) -> None:
        for key in obj:
            if key not in allowed:
                self.fail(f"{path}.{key}", "unknown key")

    def require(self, obj: dict, path: str, key: str, pred, what: str, optional=False):
        if key not in obj:
            if not optional:
                self.fail(f"{path}.{key}", "missing")
            return None
        val = obj[key]
        if optional and val is None:
            return None
        if not pred(val):
            self.fail(f"{path}.{key}", f"expected {what}")
            return None
        return val


def _check_set(ck: _Checker, obj, path: str) -> None:
    if not isinstance(obj, dict):
        ck.fail(path, "expected an object")
        return
    kind = obj.get("kind")
    if kind == "box":
        ck.known_keys(obj, path, {"kind", "lo", "hi"})
        ck.require(obj, path, "lo", _is_vec, "a number list")
        ck.require(obj, path, "hi", _is_vec, "a number list")
    elif kind == "ball":
        ck.known_keys(obj, path, {"kind", "center", "radius"})
        ck.require(obj, path, "center", _is_vec, "a number list")
        ck.require(obj, path, "radius", lambda v: _is_num(v) and v > 0, "a positive number")
    elif kind == "all":
        ck.known_keys(obj, path, {"kind", "dim"})
        ck.require(obj, path, "dim", lambda v: isinstance(v, int) and v > 0, "a positive integer")
    else:
        ck.fail(f"{path}.kind", "expected one of box|ball|all")


def _check_noise(ck: _Checker, obj, path: str) -> None:
    if not isinstance(obj, dict):
        ck.fail(path, "expected an object")
        return
    ck.known_keys(obj, path, {"bound", "distribution", "sigma", "cov_floor"})
    ck.require(obj, path, "bound", lambda v: _is_num(v) and v >= 0, "a nonnegative number")
    dist = obj.get("distribution", UNIFORM_BOX)
    if dist not in (UNIFORM_BOX, TRUNCATED_GAUSSIAN):
        ck.fail(f"{path}.distribution", "expected uniform_box|truncated_gaussian")
    if dist == TRUNCATED_GAUSSIAN:
        ck.require(obj, path, "sigma", lambda v: _is_num(v) and v > 0, "a positive number")
    ck.require(obj, path, "cov_floor", lambda v: _is_num(v) and v >= 0, "a nonnegative number", optional=True)


def _check_feature_map(ck: _Checker, obj, path: str) -> None:
    if not isinstance(obj, dict):
        ck.fail(path, "expected an object")
        return
    kind = obj.get("kind")
    if kind == "linear":
        ck.known_keys(obj, path, {"kind"})
    elif kind == "polynomial":
        ck.known_keys(obj, path, {"kind", "degree"})
        ck.require(obj, path, "degree", lambda v: isinstance(v, int) and v >= 1, "an integer >= 1")
    elif kind == "sinusoid":
        ck.known_keys(obj, path, {"kind", "frequencies"})
        ck.require(obj, path, "frequencies", _is_vec, "a number list")
    elif kind == "tanh":
        ck.known_keys(obj, path, {"kind", "scales"})
        ck.require(obj, path, "scales", _is_vec, "a number list")
    else:
        ck.fail(f"{path}.kind", "expected one of linear|polynomial|sinusoid|tanh")


def _check_schedule(ck: _Checker, obj, path: str) -> None:
    if not isinstance(obj, dict):
        ck.fail(path, "expected an object")
        return
    kind = obj.get("kind")
    if kind == "constant":
        ck.known_keys(obj, path, {"kind", "value"})
        ck.require(obj, path, "value", _is_vec, "a number list")
    elif kind == "piecewise_constant":
        ck.known_keys(obj, path, {"kind", "switch_times", "values", "times_are_fractions"})
        times = ck.require(obj, path, "switch_times", lambda v: isinstance(v, list) and all(_is_num(x) for x in v), "a number list")
        vals = ck.require(
            obj, path, "values",
            lambda v: isinstance(v, list) and len(v) > 0 and all(_is_vec(x) for x in v),
            "a list of number lists",
        )
        frac = obj.get("times_are_fractions", False)
        if not isinstance(frac, bool):
            ck.fail(f"{path}.times_are_fractions", "expected a boolean")
        if frac and times is not None and any(not (0.0 <= x < 1.0) for x in times):
            ck.fail(f"{path}.switch_times", "fractional times must lie in [0, 1)")
        if times is not None and vals is not None and len(vals) != len(times) + 1:
            ck.fail(f"{path}.values", "need len(values) == len(switch_times) + 1")
    elif kind == "sinusoid":
        ck.known_keys(obj, path, {"kind", "base", "amplitude", "period"})
        ck.require(obj, path, "base", _is_vec, "a number list")
        ck.require(obj, path, "amplitude", _is_vec, "a number list")
        ck.require(obj, path, "period", lambda v: _is_num(v) and v > 0, "a positive number")
    else:
        ck.fail(f"{path}.kind", "expected one of constant|piecewise_constant|sinusoid")


def validate_config(cfg: Any) -> None:
    """Raise ConfigError with one message per offending field."""
    ck = _Checker()
    if not isinstance(cfg, dict):
        raise ConfigError(["config: expected a JSON object"])
    ck.known_keys(cfg, "config", {"schema_version", "system", "alg", "est", "T", "seeds", "outputs", "experiment"})
    if cfg.get("schema_version") != SCHEMA_VERSION:
        ck.fail("config.schema_version", f"expected {SCHEMA_VERSION}")

    system = cfg.get("system")
    if not isinstance(system, dict):
        ck.fail("config.system", "missing or not an object")
    else:
        path = "config.system"
        ck.known_keys(system, path, {"delta", "feature_map", "cost", "theta_set", "a_set", "x0", "w_law", "obs_law", "schedule"})
        ck.require(system, path, "delta", lambda v: _is_num(v) and v > 0, "a positive number")
        _check_feature_map(ck, system.get("feature_map"), f"{path}.feature_map")
        cost = system.get("cost")
        if not isinstance(cost, dict):
            ck.fail(f"{path}.cost", "missing or not an object")
        else:
            ck.known_keys(cost, f"{path}.cost", {"q", "r", "lam", "theta_bar"})
            for key in ("q", "r", "lam"):
                ck.require(cost, f"{path}.cost", key, lambda v: _is_num(v) and v >= 0, "a nonnegative number")
            ck.require(cost, f"{path}.cost", "theta_bar", _is_vec, "a number list")
        _check_set(ck, system.get("theta_set"), f"{path}.theta_set")
        _check_set(ck, system.get("a_set"), f"{path}.a_set")
        ck.require(system, path, "x0", _is_vec, "a number list")
        _check_noise(ck, system.get("w_law"), f"{path}.w_law")
        _check_noise(ck, system.get("obs_law"), f"{path}.obs_law")
        _check_schedule(ck, system.get("schedule"), f"{path}.schedule")

    alg = cfg.get("alg")
    if not isinstance(alg, dict):
        ck.fail("config.alg", "missing or not an object")
    else:
        ck.known_keys(alg, "config.alg", {"kind", "eta", "buffer", "bias", "eps_theta", "theta0"})
        if alg.get("kind") not in ALG_KINDS:
            ck.fail("config.alg.kind", f"expected one of {'|'.join(ALG_KINDS)}")
        ck.require(alg, "config.alg", "eta", lambda v: _is_num(v) and v >= 0, "a nonnegative number")
        ck.require(alg, "config.alg", "buffer", lambda v: isinstance(v, int) and v >= 1, "an integer >= 1", optional=True)
        ck.require(alg, "config.alg", "bias", _is_num, "a number", optional=True)
        ck.require(alg, "config.alg", "eps_theta", lambda v: _is_num(v) and v > 0, "a positive number", optional=True)
        ck.require(alg, "config.alg", "theta0", _is_num, "a number", optional=True)

    est = cfg.get("est")
    if not isinstance(est, dict):
        ck.fail("config.est", "missing or not an object")
    else:
        ck.known_keys(est, "config.est", {"kind", "iota", "frozen_offset", "a0", "feature_norm_bound"})
        if est.get("kind") not in EST_KINDS:
            ck.fail("config.est.kind", f"expected one of {'|'.join(EST_KINDS)}")
        ck.require(est, "config.est", "iota", lambda v: _is_num(v) and v >= 0, "a nonnegative number", optional=True)
        ck.require(est, "config.est", "frozen_offset", _is_num, "a number", optional=True)
        ck.require(est, "config.est", "a0", _is_vec, "a number list", optional=True)
        ck.require(est, "config.est", "feature_norm_bound", lambda v: _is_num(v) and v > 0, "a positive number", optional=True)

    ck.require(cfg, "config", "T", lambda v: isinstance(v, int) and v >= 0, "an integer >= 0")
    seeds = ck.require(
        cfg, "config", "seeds",
        lambda v: isinstance(v, list) and len(v) > 0 and all(isinstance(s, int) and s >= 0 for s in v),
        "a nonempty list of nonnegative integers",
    )
    if seeds is not None and len(set(seeds)) != len(seeds):
        ck.fail("config.seeds", "seeds must be distinct")

    outputs = cfg.get("outputs")
    if outputs is None:
        pass
    elif not isinstance(outputs, dict):
        ck.fail("config.outputs", "expected an object")
    else:
        ck.known_keys(outputs, "config.outputs", {"trace_csv", "summary_json", "plot_data"})
        for key in ("trace_csv", "summary_json", "plot_data"):
            if key in outputs and not isinstance(outputs[key], bool):
                ck.fail(f"config.outputs.{key}", "expected a boolean")

    experiment = cfg.get("experiment")
    if experiment is None:
        pass
    elif not isinstance(experiment, dict):
        ck.fail("config.experiment", "expected an object")
    else:
        ck.known_keys(experiment, "config.experiment", {"kind", "sweep_axis", "values"})
        kind = experiment.get("kind")
        if kind not in ("single", "sweep"):
            ck.fail("config.experiment.kind", "expected single|sweep")
        if kind == "sweep":
            if experiment.get("sweep_axis") not in SWEEP_AXES:
                ck.fail("config.experiment.sweep_axis", f"expected one of {'|'.join(SWEEP_AXES)}")
            vals = experiment.get("values")
            if not (isinstance(vals, list) and len(vals) > 0 and all(_is_num(v) for v in vals)):
                ck.fail("config.experiment.values", "expected a nonempty number list")
            elif experiment.get("sweep_axis") == "T" and any(
                not (isinstance(v, int) and v >= 0) for v in vals
            ):
                ck.fail("config.experiment.values", "T sweep values must be integers >= 0")

    if ck.errors:
        raise ConfigError(ck.errors)


def canonical_json(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


def _build_set(obj: dict):
    if obj["kind"] == "box":
        return Box(obj["lo"], obj["hi"])
    if obj["kind"] == "ball":
        return Ball(obj["center"], obj["radius"])
    return All(obj["dim"])


def _build_feature_map(obj: dict):
    if obj["kind"] == "linear":
        return features.Linear()
    if obj["kind"] == "polynomial":
        return features.Polynomial(obj["degree"])
    if obj["kind"] == "sinusoid":
        return features.Sinusoid(obj["frequencies"])
    return features.Tanh(obj["scales"])


def _build_schedule(obj: dict, horizon: int):
    if obj["kind"] == "constant":
        return sched.Constant(obj["value"])
    if obj["kind"] == "piecewise_constant":
        times = obj["switch_times"]
        if obj.get("times_are_fractions", False):
            times = [int(frac * horizon) for frac in times]
        return sched.PiecewiseConstant(times, obj["values"])
    return sched.Sinusoid(obj["base"], obj["amplitude"], obj["period"])


def _build_noise(obj: dict) -> NoiseLaw:
    return NoiseLaw(
        bound=obj["bound"],
        distribution=obj.get("distribution", UNIFORM_BOX),
        sigma=obj.get("sigma"),
        cov_floor=obj.get("cov_floor"),
    )


def build_spec(system: dict, horizon: int) -> SystemSpec:
    cost = system["cost"]
    try:
        return SystemSpec(
            delta=system["delta"],
            feature_map=_build_feature_map(system["feature_map"]),
            cost=CostWeights(q=cost["q"], r=cost["r"], lam=cost["lam"], theta_bar=cost["theta_bar"]),
            theta_set=_build_set(system["theta_set"]),
            a_set=_build_set(system["a_set"]),
            x0=system["x0"],
            w_law=_build_noise(system["w_law"]),
            obs_law=_build_noise(system["obs_law"]),
            schedule=_build_schedule(system["schedule"], horizon),
            horizon=horizon,
        )
    except InvalidSpecError as exc:
        raise ConfigError([f"config.system: {exc}"]) from exc


def build_alg(alg: dict) -> AlgSettings:
    return AlgSettings(
        kind=alg["kind"],
        eta=alg["eta"],
        buffer=alg.get("buffer", 1),
        bias=alg.get("bias", 0.0),
        eps_theta=alg.get("eps_theta"),
        theta0=alg.get("theta0"),
    )


def build_est(est: dict) -> EstSettings:
    return EstSettings(
        kind=est["kind"],
        iota=est.get("iota"),
        frozen_offset=est.get("frozen_offset", 0.0),
        a0=est.get("a0"),
        feature_norm_bound=est.get("feature_norm_bound", 1.0),
    )


@dataclass(frozen=True)
class Cell:
    """One (scenario, seed) unit of work."""

    cell_id: str
    spec: SystemSpec
    alg: AlgSettings
    est: EstSettings
    seed: int


def _fmt_value(v) -> str:
    return format(v, "g")


def _scenario_configs(cfg: dict):
    experiment = cfg.get("experiment") or {"kind": "single"}
    if experiment.get("kind", "single") == "single":
        yield "single", cfg
        return
    axis = experiment["sweep_axis"]
    for value in experiment["values"]:
        variant = copy.deepcopy(cfg)
        if axis == "T":
            variant["T"] = int(value)
        elif axis == "eta":
            variant["alg"]["eta"] = value
        elif axis == "iota":
            variant["est"]["iota"] = value
        elif axis == "eps_bar":
            variant["system"]["w_law"]["bound"] = value
        elif axis == "offset":
            variant["est"]["frozen_offset"] = value
        yield f"{axis}{_fmt_value(value)}", variant


def expand_cells(cfg: dict, seed_override: Optional[int] = None) -> list[Cell]:
    """Validate and expand a config dict into runnable cells."""
    validate_config(cfg)
    cells = []
    seeds = [seed_override] if seed_override is not None else cfg["seeds"]
    for scenario_id, variant in _scenario_configs(cfg):
        spec = build_spec(variant["system"], variant["T"])
        alg = build_alg(variant["alg"])
        est = build_est(variant["est"])
        for seed in seeds:
            cells.append(Cell(f"{scenario_id}-s{seed}", spec, alg, est, seed))
    return cells


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"])
    validate_config(cfg)
    return cfg
