"""Acceptance suite: one callable per criterion, each returning pass/fail
(or inconclusive where a precondition gate applies) plus a detail line.

Every experiment here is built from the same config dicts that ship as JSON
files under configs/, so the CLI can reproduce each one verbatim.
"""

from __future__ import annotations

import copy
import math
import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .config import expand_cells, validate_config
from .derivatives import fd_gradient, fd_jacobian, ghat_jacobians, hhat_gradients
from .errors import ConfigError
from .metrics import (
    error_derivative_bounds,
    gradient_bias_series,
    pg_norm_sq_series,
    theorem_grad_error_rhs,
    trajectory_distance,
)
from .sets import Ball, Box, project
from .simulate import extract_zeta, replay_exact, run_meta
from .surrogate import surrogate_cost, surrogate_grad
from .system import CostWeights, SystemSpec, policy_input, residual, stage_cost
from .trace import parse_trace, render_table
from . import features, noise, schedule as sched


@dataclass
class CriterionResult:
    number: int
    name: str
    status: str  # pass | fail | inconclusive
    detail: str
    seconds: float = 0.0


def _system(
    eps_bar: float = 0.1,
    e_f: float = 0.05,
    schedule: Optional[dict] = None,
    feature_map: Optional[dict] = None,
    lam: float = 0.1,
) -> dict:
    return {
        "delta": 0.1,
        "feature_map": feature_map or {"kind": "linear"},
        "cost": {"q": 1.0, "r": 0.2, "lam": lam, "theta_bar": [1.0]},
        "theta_set": {"kind": "box", "lo": [0.2], "hi": [2.0]},
        "a_set": {"kind": "box", "lo": [-2.0], "hi": [2.0]},
        "x0": [1.0],
        "w_law": {"bound": eps_bar, "distribution": "uniform_box"},
        "obs_law": {"bound": e_f, "distribution": "uniform_box"},
        "schedule": schedule or {"kind": "constant", "value": [0.8]},
    }


def _config(system: dict, alg: dict, est: dict, T: int, seeds: list, experiment=None, outputs=None) -> dict:
    cfg = {
        "schema_version": 1,
        "system": system,
        "alg": alg,
        "est": est,
        "T": T,
        "seeds": seeds,
        "outputs": outputs or {"trace_csv": False, "summary_json": False, "plot_data": False},
        "experiment": experiment or {"kind": "single"},
    }
    validate_config(cfg)
    return cfg


_THREE_SWITCH = {
    "kind": "piecewise_constant",
    "switch_times": [0.125, 0.375, 0.625],
    "values": [[0.5], [1.2], [0.4], [1.0]],
    "times_are_fractions": True,
}

ACCEPTANCE_CONFIGS: dict[str, dict] = {
    "c01_oracle_collapse": _config(
        _system(
            eps_bar=0.1,
            e_f=0.05,
            feature_map={"kind": "sinusoid", "frequencies": [1.3]},
            schedule={
                "kind": "piecewise_constant",
                "switch_times": [0.3, 0.6],
                "values": [[0.8], [1.2], [0.5]],
                "times_are_fractions": True,
            },
        ),
        {"kind": "mgaps", "eta": 0.05},
        {"kind": "oracle"},
        T=1000,
        seeds=[7],
    ),
    "c04_gaps_equivalence_mgaps": _config(
        _system(feature_map={"kind": "sinusoid", "frequencies": [1.3]}, schedule=_THREE_SWITCH),
        {"kind": "mgaps", "eta": 0.05},
        {"kind": "oracle"},
        T=200,
        seeds=[3],
    ),
    "c04_gaps_equivalence_buffered": _config(
        _system(feature_map={"kind": "sinusoid", "frequencies": [1.3]}, schedule=_THREE_SWITCH),
        {"kind": "gaps_buffered", "eta": 0.05, "buffer": 200},
        {"kind": "oracle"},
        T=200,
        seeds=[3],
    ),
    "c05_bias_eta_scaling": _config(
        _system(eps_bar=0.15, e_f=0.0),
        {"kind": "mgaps", "eta": 0.02},
        {"kind": "oracle"},
        T=4000,
        seeds=[11],
        experiment={"kind": "sweep", "sweep_axis": "eta", "values": [0.02, 0.01]},
    ),
    "c06_local_regret_T2000": _config(
        _system(eps_bar=0.1, e_f=0.05),
        {"kind": "mgaps", "eta": 0.01, "theta0": 2.0},
        {"kind": "gradient"},
        T=2000,
        seeds=list(range(10)),
    ),
    "c06_local_regret_T16000": _config(
        _system(eps_bar=0.1, e_f=0.05),
        {"kind": "mgaps", "eta": 0.01 * math.sqrt(2000.0 / 16000.0), "theta0": 2.0},
        {"kind": "gradient"},
        T=16000,
        seeds=list(range(10)),
    ),
    "c07_estimator_scaling": _config(
        _system(eps_bar=0.2, e_f=0.0, schedule=_THREE_SWITCH),
        {"kind": "mgaps", "eta": 0.05},
        {"kind": "gradient"},
        T=2000,
        seeds=list(range(20)),
        experiment={"kind": "sweep", "sweep_axis": "T", "values": [2000, 8000]},
    ),
    "c08_gradient_error_bound": _config(
        _system(eps_bar=0.2, e_f=0.0, schedule=_THREE_SWITCH),
        {"kind": "mgaps", "eta": 0.05},
        {"kind": "gradient"},
        T=2000,
        seeds=list(range(20)),
    ),
    "c09_mismatch_distance": _config(
        _system(eps_bar=0.1, e_f=0.0),
        {"kind": "mgaps", "eta": 0.05},
        {"kind": "frozen", "frozen_offset": 0.01},
        T=2000,
        seeds=[4],
        experiment={"kind": "sweep", "sweep_axis": "offset", "values": [0.01, 0.02, 0.04]},
    ),
    "c10_biased_ogd_beta0": _config(
        _system(eps_bar=0.0, e_f=0.0),
        {"kind": "biased_ogd", "eta": 0.05, "bias": 0.0, "theta0": 1.4},
        {"kind": "oracle"},
        T=1000,
        seeds=[1],
    ),
    "c10_biased_ogd_beta001": _config(
        _system(eps_bar=0.0, e_f=0.0),
        {"kind": "biased_ogd", "eta": 0.05, "bias": -0.01, "theta0": 1.4},
        {"kind": "oracle"},
        T=1000,
        seeds=[1],
    ),
    "c10_biased_ogd_beta002": _config(
        _system(eps_bar=0.0, e_f=0.0),
        {"kind": "biased_ogd", "eta": 0.05, "bias": -0.02, "theta0": 1.4},
        {"kind": "oracle"},
        T=1000,
        seeds=[1],
    ),
    "c11_determinism": _config(
        _system(eps_bar=0.1, e_f=0.05, schedule=_THREE_SWITCH),
        {"kind": "mgaps", "eta": 0.05},
        {"kind": "gradient"},
        T=100,
        seeds=[1, 2],
        outputs={"trace_csv": True, "summary_json": True, "plot_data": True},
    ),
}


def _run_config(name: str, seed_filter=None):
    """Run every cell of a stored acceptance config; returns (cell, record) pairs."""
    cells = expand_cells(copy.deepcopy(ACCEPTANCE_CONFIGS[name]))
    out = []
    for cell in cells:
        if seed_filter is not None and cell.seed not in seed_filter:
            continue
        out.append((cell, run_meta(cell.spec, cell.alg, cell.est, cell.seed)))
    return out


def criterion_oracle_collapse() -> CriterionResult:
    """Exact-parameter estimates collapse every mismatch quantity to zero."""
    (cell, rec), = _run_config("c01_oracle_collapse")
    replay = replay_exact(cell.spec, rec.thetas, cell.seed)
    zetas = extract_zeta(cell.spec, rec, replay)
    ok = (
        float(np.max(rec.eps0, initial=0.0)) == 0.0
        and float(np.max(rec.eps1, initial=0.0)) == 0.0
        and np.all(zetas == 0.0)
        and trajectory_distance(rec, replay) == 0.0
        and np.array_equal(replay[0], rec.xs)
        and np.array_equal(replay[1], rec.ys)
    )
    return CriterionResult(
        1, "oracle-collapse", "pass" if ok else "fail",
        f"T={len(rec)}: eps=0, zeta=0, distance=0, replay bit-exact = {bool(ok)}",
    )


def _fd_spec(feature_map) -> SystemSpec:
    return SystemSpec(
        delta=0.1,
        feature_map=feature_map,
        cost=CostWeights(q=1.0, r=0.2, lam=0.1, theta_bar=[1.0]),
        theta_set=Box([0.2], [2.0]),
        a_set=Box([-2.0] * feature_map.out_dim, [2.0] * feature_map.out_dim),
        x0=[1.0],
        w_law=noise.NoiseLaw(bound=0.1),
        obs_law=noise.NoiseLaw(bound=0.0),
        schedule=sched.Constant([0.5] * feature_map.out_dim),
        horizon=200,
    )


def _ghat_value(spec, x, theta, a_hat):
    f_hat = residual(spec, x, a_hat)
    u = policy_input(spec, x, theta, f_hat)
    return x + spec.delta * (u + f_hat)


def _hhat_value(spec, x, theta, a_hat):
    u = policy_input(spec, x, theta, residual(spec, x, a_hat))
    return stage_cost(spec, x, u, theta)


def _close(analytic: float, fd: float, tol: float) -> bool:
    return abs(analytic - fd) <= max(1e-8, tol * max(1.0, abs(analytic)))


def criterion_derivatives() -> CriterionResult:
    """Analytic Jacobians and the rollout gradient agree with differences."""
    rng = np.random.default_rng(2024)
    maps = [
        features.Linear(),
        features.Polynomial(3),
        features.Sinusoid([1.0, 2.2]),
        features.Tanh([0.7, 1.3]),
    ]
    worst = 0.0
    for fm in maps:
        spec = _fd_spec(fm)
        for _ in range(25):
            x = np.array([rng.uniform(-1.5, 1.5)])
            th = np.array([rng.uniform(0.25, 1.95)])
            ah = rng.uniform(-1.8, 1.8, size=spec.p)
            gj = ghat_jacobians(spec, x, th, ah)
            hg = hhat_gradients(spec, x, th, ah)
            fd_gx = fd_jacobian(lambda z: _ghat_value(spec, z, th, ah), x)
            fd_gt = fd_jacobian(lambda z: _ghat_value(spec, x, z, ah), th)
            fd_hx = fd_gradient(lambda z: _hhat_value(spec, z, th, ah), x)
            fd_ht = fd_gradient(lambda z: _hhat_value(spec, x, z, ah), th)
            checks = [
                (gj.d_x[0, 0], fd_gx[0, 0]),
                (gj.d_theta[0, 0], fd_gt[0, 0]),
                (hg.d_x[0], fd_hx[0]),
                (hg.d_theta[0], fd_ht[0]),
            ]
            for analytic, fd in checks:
                worst = max(worst, abs(analytic - fd) / max(1.0, abs(analytic)))
                if not _close(analytic, fd, 1e-6):
                    return CriterionResult(
                        2, "derivative-correctness", "fail",
                        f"jacobian mismatch {analytic} vs fd {fd} ({type(fm).__name__})",
                    )
    spec = _fd_spec(features.Sinusoid([1.3]))
    from .simulate import w_sequence

    w = w_sequence(spec, 3)
    worst_s = 0.0
    for _ in range(50):
        th = np.array([rng.uniform(0.25, 1.95)])
        t = int(rng.integers(0, 80))
        g = surrogate_grad(spec, th, t, w)[0]
        g_fd = fd_gradient(
            lambda z: surrogate_cost(spec, project(spec.theta_set, z), t, w), th
        )[0]
        worst_s = max(worst_s, abs(g - g_fd) / max(1.0, abs(g)))
        if not _close(g, g_fd, 1e-5):
            return CriterionResult(
                2, "derivative-correctness", "fail",
                f"surrogate gradient {g} vs fd {g_fd} at t={t}",
            )
    return CriterionResult(
        2, "derivative-correctness", "pass",
        f"100 jacobian draws (worst rel {worst:.2e} <= 1e-6), "
        f"50 surrogate draws (worst rel {worst_s:.2e} <= 1e-5)",
    )


def criterion_projections() -> CriterionResult:
    """Non-expansiveness and idempotence over 10^4 random pairs."""
    rng = np.random.default_rng(99)
    box = Box([-1.0, -1.0], [1.0, 1.0])
    ball = Ball([0.2, -0.1], 0.8)
    slack = 1e-12
    for cset, exact_idem in ((box, True), (ball, False)):
        pts = rng.uniform(-3.0, 3.0, size=(10_000, 2, 2))
        for q, q2 in pts:
            pq, pq2 = project(cset, q), project(cset, q2)
            if np.linalg.norm(pq - pq2) > np.linalg.norm(q - q2) + slack:
                return CriterionResult(3, "projection-properties", "fail", "expansive pair found")
            again = project(cset, pq)
            err = float(np.linalg.norm(again - pq))
            if exact_idem and err != 0.0:
                return CriterionResult(3, "projection-properties", "fail", "box projection not idempotent")
            if err > slack:
                return CriterionResult(3, "projection-properties", "fail", "ball idempotence exceeds 1e-12")
    return CriterionResult(
        3, "projection-properties", "pass",
        "10^4 box and ball pairs non-expansive (slack 1e-12), projections idempotent",
    )


def criterion_gaps_equivalence() -> CriterionResult:
    """Full-buffer truncation reproduces the accumulator gradient."""
    (_, rec_m), = _run_config("c04_gaps_equivalence_mgaps")
    (_, rec_b), = _run_config("c04_gaps_equivalence_buffered")
    gap = float(np.max(np.linalg.norm(rec_m.g_approx - rec_b.g_approx, axis=1), initial=0.0))
    ok = gap <= 1e-10
    return CriterionResult(
        4, "full-buffer-equivalence", "pass" if ok else "fail",
        f"T=200, B=200: max |G' - G| = {gap:.3e} (tolerance 1e-10)",
    )


def criterion_bias_eta_scaling() -> CriterionResult:
    """Gradient bias in the second half scales linearly with the step size."""
    runs = _run_config("c05_bias_eta_scaling")
    maxes = {}
    for cell, rec in runs:
        bias = gradient_bias_series(cell.spec, rec)
        maxes[cell.alg.eta] = float(np.max(bias[len(rec) // 2 :]))
    ratio = maxes[0.02] / maxes[0.01]
    ok = 1.5 <= ratio <= 2.5
    return CriterionResult(
        5, "gradient-bias-eta-scaling", "pass" if ok else "fail",
        f"max bias(eta=0.02)={maxes[0.02]:.4g}, max bias(eta=0.01)={maxes[0.01]:.4g}, "
        f"ratio {ratio:.2f} in [1.5, 2.5] = {ok}",
    )


def criterion_local_regret_sublinearity() -> CriterionResult:
    """Mean local regret per step drops by >= 2x from T=2000 to T=16000."""
    means = {}
    for name, horizon in (("c06_local_regret_T2000", 2000), ("c06_local_regret_T16000", 16000)):
        vals = []
        for cell, rec in _run_config(name):
            pg = pg_norm_sq_series(cell.spec, rec.thetas, cell.alg.eta, rec.ws)
            vals.append(float(np.sum(pg)) / len(rec))
        means[horizon] = float(np.mean(vals))
    factor = means[2000] / means[16000]
    ok = factor >= 2.0
    return CriterionResult(
        6, "local-regret-sublinearity", "pass" if ok else "fail",
        f"mean R/T: T=2000 -> {means[2000]:.5f}, T=16000 -> {means[16000]:.5f}, "
        f"decrease factor {factor:.2f} >= 2 = {ok} (10 seeds, eta ~ 1/sqrt(T))",
    )


def criterion_estimator_scaling() -> CriterionResult:
    """Total squared prediction error grows sublinearly in the horizon."""
    sums: dict[int, list] = {}
    for cell, rec in _run_config("c07_estimator_scaling"):
        sums.setdefault(cell.spec.horizon, []).append(float(np.sum(rec.eps0**2)))
    mean2, mean8 = np.mean(sums[2000]), np.mean(sums[8000])
    ratio = mean8 / mean2
    ok = ratio <= 3.0
    return CriterionResult(
        7, "estimator-regret-scaling", "pass" if ok else "fail",
        f"20-seed mean sum eps0^2: T=2000 -> {mean2:.2f}, T=8000 -> {mean8:.2f}, "
        f"ratio {ratio:.2f} <= 3.0 = {ok}",
    )


def criterion_gradient_error_bound() -> CriterionResult:
    """Monte-Carlo check of the squared-gradient-loss inequality."""
    runs = _run_config("c08_gradient_error_bound")
    spec = runs[0][0].spec
    horizon = spec.horizon
    eps_bar = spec.w_law.bound
    loss_sums = [float(np.sum(rec.eps0**2)) for _, rec in runs]
    grad_sums = [float(np.sum(rec.eps1**2)) for _, rec in runs]
    precondition_cap = eps_bar**3 * horizon
    mean_loss = float(np.mean(loss_sums))
    if mean_loss > precondition_cap:
        return CriterionResult(
            8, "gradient-error-bound", "inconclusive",
            f"precondition failed: mean sum eps0^2 = {mean_loss:.2f} > "
            f"eps_bar^3*T = {precondition_cap:.2f}; inequality not evaluated",
        )
    sigma_lb = spec.w_law.coordinate_variance(spec.n)
    beta_e, gamma_e = error_derivative_bounds(spec)
    rhs = theorem_grad_error_rhs(spec.k, sigma_lb, eps_bar, beta_e, gamma_e, horizon)
    mean_grad = float(np.mean(grad_sums))
    ok = mean_grad <= rhs
    return CriterionResult(
        8, "gradient-error-bound", "pass" if ok else "fail",
        f"precondition {mean_loss:.2f} <= {precondition_cap:.2f}; "
        f"mean sum eps1^2 = {mean_grad:.1f} <= rhs {rhs:.1f} = {ok} "
        f"(sigma_lb={sigma_lb:.4f}, gamma_e={gamma_e:g}, 20 seeds)",
    )


def criterion_mismatch_distance_linearity() -> CriterionResult:
    """Trajectory distance and perturbation mass double with the offset."""
    dist = {}
    zsum = {}
    for cell, rec in _run_config("c09_mismatch_distance"):
        replay = replay_exact(cell.spec, rec.thetas, cell.seed)
        zetas = extract_zeta(cell.spec, rec, replay)
        offset = cell.est.frozen_offset
        dist[offset] = trajectory_distance(rec, replay)
        zsum[offset] = float(np.sum(np.linalg.norm(zetas, axis=1)))
    ratios = [
        dist[0.02] / dist[0.01],
        dist[0.04] / dist[0.02],
        zsum[0.02] / zsum[0.01],
        zsum[0.04] / zsum[0.02],
    ]
    ok = all(1.6 <= rr <= 2.6 for rr in ratios)
    return CriterionResult(
        9, "mismatch-distance-linearity", "pass" if ok else "fail",
        "per-doubling ratios (distance then zeta): "
        + ", ".join(f"{rr:.2f}" for rr in ratios)
        + f" all in [1.6, 2.6] = {ok}",
    )


def criterion_biased_ogd_shape() -> CriterionResult:
    """Fitted bias slope of the local regret consistent across bias levels."""
    regret = {}
    for name, beta in (
        ("c10_biased_ogd_beta0", 0.0),
        ("c10_biased_ogd_beta001", 0.01),
        ("c10_biased_ogd_beta002", 0.02),
    ):
        (cell, rec), = _run_config(name)
        pg = pg_norm_sq_series(cell.spec, rec.thetas, cell.alg.eta, rec.ws)
        regret[beta] = float(np.sum(pg))
    horizon = 1000
    slope1 = (regret[0.01] - regret[0.0]) / (0.01 * horizon)
    slope2 = (regret[0.02] - regret[0.0]) / (0.02 * horizon)
    ok = slope1 > 0 and slope2 > 0 and max(slope1, slope2) / min(slope1, slope2) <= 2.0
    return CriterionResult(
        10, "biased-ogd-regret-shape", "pass" if ok else "fail",
        f"R(0)={regret[0.0]:.4f}, R(.01)={regret[0.01]:.4f}, R(.02)={regret[0.02]:.4f}; "
        f"fitted slopes {slope1:.4f}, {slope2:.4f}, ratio "
        f"{max(slope1, slope2) / min(slope1, slope2):.2f} <= 2 = {ok}",
    )


def _broken_variants() -> list:
    base = copy.deepcopy(ACCEPTANCE_CONFIGS["c11_determinism"])
    bad1 = copy.deepcopy(base)
    bad1["bogus"] = 1
    bad2 = copy.deepcopy(base)
    bad2["alg"]["kind"] = "adam"
    bad3 = copy.deepcopy(base)
    bad3["T"] = -5
    bad4 = copy.deepcopy(base)
    bad4["seeds"] = [1, 1]
    bad5 = copy.deepcopy(base)
    bad5["system"]["w_law"]["bound"] = "big"
    return [bad1, bad2, bad3, bad4, bad5]


def criterion_determinism_formats() -> CriterionResult:
    """Byte-identical reruns, exact CSV round-trip, schema rejection."""
    from .cli import main as cli_main

    cfg = copy.deepcopy(ACCEPTANCE_CONFIGS["c11_determinism"])
    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = os.path.join(tmp, "config.json")
        import json

        with open(cfg_path, "w") as fh:
            json.dump(cfg, fh)
        outs = []
        for sub in ("a", "b"):
            code = cli_main(["run", cfg_path, "--out-dir", os.path.join(tmp, sub), "--quiet"])
            if code != 0:
                return CriterionResult(11, "determinism-and-formats", "fail", f"run exit code {code}")
            outs.append(os.path.join(tmp, sub))
        from .config import config_hash

        chash = config_hash(cfg)
        for cell_file in sorted(os.listdir(os.path.join(outs[0], chash))):
            p0 = os.path.join(outs[0], chash, cell_file)
            p1 = os.path.join(outs[1], chash, cell_file)
            with open(p0, "rb") as f0, open(p1, "rb") as f1:
                if f0.read() != f1.read():
                    return CriterionResult(
                        11, "determinism-and-formats", "fail", f"{cell_file} differs between reruns"
                    )
            if cell_file.endswith(".csv"):
                with open(p0) as fh:
                    text = fh.read()
                if render_table(parse_trace(text)) != text:
                    return CriterionResult(
                        11, "determinism-and-formats", "fail", f"{cell_file} round-trip not exact"
                    )
    rejected = 0
    for bad in _broken_variants():
        try:
            validate_config(bad)
        except ConfigError:
            rejected += 1
    if rejected != 5:
        return CriterionResult(
            11, "determinism-and-formats", "fail", f"only {rejected}/5 malformed configs rejected"
        )
    return CriterionResult(
        11, "determinism-and-formats", "pass",
        "byte-identical reruns, exact CSV round-trip, 5/5 malformed configs rejected",
    )


CRITERIA: list[Callable[[], CriterionResult]] = [
    criterion_oracle_collapse,
    criterion_derivatives,
    criterion_projections,
    criterion_gaps_equivalence,
    criterion_bias_eta_scaling,
    criterion_local_regret_sublinearity,
    criterion_estimator_scaling,
    criterion_gradient_error_bound,
    criterion_mismatch_distance_linearity,
    criterion_biased_ogd_shape,
    criterion_determinism_formats,
]


def write_acceptance_configs(directory: str) -> list[str]:
    """Materialize every acceptance experiment as a runnable config file."""
    import json

    os.makedirs(directory, exist_ok=True)
    written = []
    for name, cfg in ACCEPTANCE_CONFIGS.items():
        path = os.path.join(directory, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


def run_all(quiet: bool = False) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        start = time.time()
        result = fn()
        result.seconds = time.time() - start
        results.append(result)
        if not quiet:
            tag = {"pass": "PASS", "fail": "FAIL", "inconclusive": "INCONCLUSIVE"}[result.status]
            print(f"[{tag}] criterion {result.number} {result.name} ({result.seconds:.1f}s): {result.detail}")
    return results
