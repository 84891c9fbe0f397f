import logging

import numpy as np
import pytest

import adaptive_polyopt as ap
from adaptive_polyopt.errors import InvalidSpecError, RunAbortError
from adaptive_polyopt.simulate import w_sequence
from conftest import make_spec, quiet_spec

MGAPS = ap.AlgSettings(kind="mgaps", eta=0.05)
ORACLE = ap.EstSettings(kind="oracle")


def test_oracle_run_has_zero_mismatch():
    spec = make_spec(schedule=ap.PiecewiseConstant([50], [[0.5], [1.1]]))
    rec = ap.run_meta(spec, MGAPS, ORACLE, seed=2)
    assert np.all(rec.eps0 == 0.0) and np.all(rec.eps1 == 0.0)


def test_all_learning_disabled_is_fixed_gain_rollout():
    spec = quiet_spec(horizon=60)
    rec = ap.run_meta(spec, ap.AlgSettings(kind="mgaps", eta=0.0, theta0=0.7), ORACLE, seed=1)
    x = spec.x0[0]
    for t in range(60):
        assert rec.thetas[t, 0] == 0.7
        assert rec.xs[t, 0] == pytest.approx(x, rel=1e-14, abs=1e-15)
        x = x + spec.delta * (-0.7 * x)


def test_same_seed_bitwise_identical():
    spec = make_spec(horizon=150)
    a = ap.run_meta(spec, MGAPS, ap.EstSettings(kind="gradient"), seed=9)
    b = ap.run_meta(spec, MGAPS, ap.EstSettings(kind="gradient"), seed=9)
    for field in ("xs", "ys", "thetas", "a_hats", "us", "costs", "g_approx", "ws", "f_tildes"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_different_seed_differs():
    spec = make_spec(horizon=50)
    a = ap.run_meta(spec, MGAPS, ORACLE, seed=1)
    b = ap.run_meta(spec, MGAPS, ORACLE, seed=2)
    assert not np.array_equal(a.xs, b.xs)


def test_noise_stream_isolation():
    # changing the observation law must leave the disturbance realization alone
    spec_a = make_spec(obs_law=ap.NoiseLaw(bound=0.0), horizon=80)
    spec_b = make_spec(obs_law=ap.NoiseLaw(bound=0.2), horizon=80)
    assert np.array_equal(w_sequence(spec_a, 5), w_sequence(spec_b, 5))
    rec_a = ap.run_meta(spec_a, MGAPS, ORACLE, seed=5)
    rec_b = ap.run_meta(spec_b, MGAPS, ORACLE, seed=5)
    assert np.array_equal(rec_a.ws, rec_b.ws)


def test_replay_of_oracle_run_is_bit_exact():
    spec = make_spec(feature_map=ap.Sinusoid([1.3]), horizon=300)
    rec = ap.run_meta(spec, MGAPS, ORACLE, seed=7)
    xs, ys = ap.replay_exact(spec, rec.thetas, seed=7)
    assert np.array_equal(xs, rec.xs)
    assert np.array_equal(ys, rec.ys)


def test_replay_empty_horizon():
    spec = make_spec(horizon=0)
    xs, ys = ap.replay_exact(spec, np.zeros((0, 1)), seed=1)
    assert xs.shape == (0, 1) and ys.shape == (0, 1, 1)


def test_replay_rejects_infeasible_theta():
    spec = make_spec(horizon=5)
    with pytest.raises(InvalidSpecError):
        ap.replay_exact(spec, np.full((5, 1), 99.0), seed=1)


def test_zeta_zero_for_oracle_and_frozen_optimizer():
    spec = make_spec(horizon=120)
    rec = ap.run_meta(spec, MGAPS, ORACLE, seed=3)
    zet = ap.extract_zeta(spec, rec, ap.replay_exact(spec, rec.thetas, 3))
    assert np.all(zet == 0.0)
    rec0 = ap.run_meta(spec, ap.AlgSettings(kind="mgaps", eta=0.0), ap.EstSettings(kind="frozen", frozen_offset=0.3), seed=3)
    zet0 = ap.extract_zeta(spec, rec0, ap.replay_exact(spec, rec0.thetas, 3))
    assert np.all(zet0 == 0.0)  # both updates are the identity when eta = 0


def test_zeta_scales_with_offset():
    spec = make_spec(obs_law=ap.NoiseLaw(bound=0.0), horizon=500)
    sums = []
    for off in (0.01, 0.02):
        rec = ap.run_meta(spec, MGAPS, ap.EstSettings(kind="frozen", frozen_offset=off), seed=4)
        zet = ap.extract_zeta(spec, rec, ap.replay_exact(spec, rec.thetas, 4))
        sums.append(float(np.sum(np.abs(zet))))
    assert sums[1] / sums[0] == pytest.approx(2.0, rel=0.2)


def test_empty_horizon_run():
    spec = make_spec(horizon=0)
    rec = ap.run_meta(spec, MGAPS, ORACLE, seed=1)
    assert len(rec) == 0
    assert rec.costs.shape == (0,)
    assert rec.theta_final.shape == (1,)


def test_divergence_aborts_with_step():
    # gain set forcing |1 - delta*theta| > 1 destabilizes the closed loop
    spec = make_spec(
        theta_set=ap.Box([-8.0], [-8.0]),
        cost=ap.CostWeights(q=1.0, r=0.2, lam=0.1, theta_bar=[-8.0]),
        horizon=400,
    )
    with pytest.raises(RunAbortError) as err:
        ap.run_meta(spec, ap.AlgSettings(kind="mgaps", eta=0.0), ORACLE, seed=1)
    assert 0 < err.value.step <= 400


def test_eps_theta_violation_logs_warning(caplog):
    spec = make_spec(horizon=50)
    with caplog.at_level(logging.WARNING, logger="adaptive_polyopt.simulate"):
        ap.run_meta(
            spec,
            ap.AlgSettings(kind="mgaps", eta=0.5, theta0=2.0, eps_theta=1e-6),
            ap.EstSettings(kind="frozen", frozen_offset=0.5),
            seed=1,
        )
    assert any("eps_theta" in m for m in caplog.messages)


def test_biased_ogd_inside_run_matches_manual_sequence():
    spec = quiet_spec(horizon=40)
    rec = ap.run_meta(
        spec, ap.AlgSettings(kind="biased_ogd", eta=0.05, bias=-0.01, theta0=1.4), ORACLE, seed=1
    )
    from adaptive_polyopt.optimizers import biased_ogd_update
    from adaptive_polyopt.surrogate import surrogate_grad

    theta = np.array([1.4])
    w = rec.ws
    for t in range(40):
        assert rec.thetas[t, 0] == theta[0]
        grad = surrogate_grad(spec, theta, t, w)
        theta = biased_ogd_update(theta, grad, np.array([-0.01]), 0.05, spec.theta_set)
    assert rec.theta_final[0] == theta[0]


def test_frozen_estimate_bounded_state_under_small_offset():
    spec = make_spec(horizon=800)
    oracle_rec = ap.run_meta(spec, MGAPS, ORACLE, seed=6)
    frozen_rec = ap.run_meta(spec, MGAPS, ap.EstSettings(kind="frozen", frozen_offset=0.05), seed=6)
    assert np.max(np.abs(frozen_rec.xs)) <= 2.0 * np.max(np.abs(oracle_rec.xs))
