import logging
import math

import numpy as np
import pytest

import adaptive_polyopt as ap
from adaptive_polyopt.errors import InvalidSpecError
from adaptive_polyopt.rng import Xoshiro256pp
from adaptive_polyopt.system import (
    observe_residual,
    policy_input,
    residual,
    sanity_warnings,
    stage_cost,
    step_true,
    step_with,
)
from conftest import make_spec, quiet_spec


def test_residual_linear_scalar_product(spec):
    assert residual(spec, [2.0], [3.0])[0] == 6.0


def test_residual_zero_parameter(spec):
    assert residual(spec, [1.7], [0.0])[0] == 0.0


def test_residual_sinusoid_odd_zero():
    spec = make_spec(
        feature_map=ap.Sinusoid([1.0]), schedule=ap.Constant([0.5]), a_set=ap.Box([-6.0], [6.0])
    )
    assert residual(spec, [0.0], [5.0])[0] == 0.0


def test_residual_linear_in_parameter(rng):
    spec = make_spec(
        feature_map=ap.Tanh([0.7, 1.3]),
        a_set=ap.Box([-2.0, -2.0], [2.0, 2.0]),
        schedule=ap.Constant([0.5, 0.1]),
    )
    for _ in range(50):
        x = rng.uniform(-2, 2, size=1)
        a, a2 = rng.uniform(-2, 2, size=2), rng.uniform(-2, 2, size=2)
        al, be = rng.uniform(-1, 1, size=2)
        lhs = residual(spec, x, al * a + be * a2)
        rhs = al * residual(spec, x, a) + be * residual(spec, x, a2)
        assert np.allclose(lhs, rhs, atol=1e-10)


def test_step_hand_arithmetic():
    spec = quiet_spec(schedule=ap.Constant([0.0]))
    rng = Xoshiro256pp.from_seed(0, 0)
    assert step_true(spec, [1.0], [-1.0], 0, rng)[0] == pytest.approx(0.9, abs=1e-15)


def test_step_linear_feature_hand_check():
    spec = quiet_spec(schedule=ap.Constant([1.0]))
    rng = Xoshiro256pp.from_seed(0, 0)
    # x' = x + delta*(u + x*a) = 2 + 0.1*(0 + 2) = 2.2, checked by substitution
    assert step_true(spec, [2.0], [0.0], 0, rng)[0] == pytest.approx(2.2, abs=1e-15)


def test_pure_cancellation_is_bitwise_exact():
    # with zero actuation the residual terms cancel to exactly 0.0
    spec = quiet_spec(schedule=ap.Constant([1.3]), a_set=ap.Box([-2.0], [2.0]))
    rng = Xoshiro256pp.from_seed(0, 0)
    x = np.array([0.8])
    for t in range(20):
        u = -residual(spec, x, spec.a_star(t))
        x_next = step_true(spec, x, u, t, rng)
        assert x_next[0] == x[0]
        x = x_next


def test_cancellation_reproduces_closed_loop():
    # exact-parameter input realizes x' = x + delta*psi up to one rounding
    # of the cancelled residual per step
    spec = quiet_spec(schedule=ap.Constant([1.3]), a_set=ap.Box([-2.0], [2.0]))
    rng = Xoshiro256pp.from_seed(0, 0)
    x = np.array([0.8])
    theta = np.array([0.5])
    for t in range(20):
        u = policy_input(spec, x, theta, residual(spec, x, spec.a_star(t)))
        x_next = step_true(spec, x, u, t, rng)
        closed_loop = x[0] + spec.delta * (-theta[0] * x[0])
        assert x_next[0] == pytest.approx(closed_loop, rel=1e-15, abs=1e-15)
        x = x_next


def test_policy_input_examples(spec):
    assert policy_input(spec, [1.0], [0.5], [0.0])[0] == -0.5
    assert policy_input(spec, [0.0], [1.7], [0.0])[0] == 0.0
    assert policy_input(spec, [2.0], [0.3], [1.4])[0] == pytest.approx(-2.0, abs=1e-15)


def test_stage_cost_examples():
    spec = make_spec(cost=ap.CostWeights(q=1.0, r=0.0, lam=0.0, theta_bar=[1.0]))
    assert stage_cost(spec, [0.0], [0.0], [1.0]) == 0.0
    assert stage_cost(spec, [3.0], [0.0], [0.5]) == 9.0
    spec2 = make_spec(cost=ap.CostWeights(q=1.0, r=2.0, lam=1.0, theta_bar=[0.5]))
    assert stage_cost(spec2, [1.0], [1.0], [1.5]) == pytest.approx(4.0, abs=1e-15)


def test_observe_noiseless_exact():
    spec = quiet_spec()
    rng = Xoshiro256pp.from_seed(5, 1)
    x = np.array([1.3])
    assert observe_residual(spec, x, 0, rng)[0] == residual(spec, x, spec.a_star(0))[0]


def test_observe_draws_within_bound():
    spec = make_spec(obs_law=ap.NoiseLaw(bound=0.07))
    rng = Xoshiro256pp.from_seed(5, 1)
    x = np.array([1.3])
    truth = residual(spec, x, spec.a_star(0))[0]
    for _ in range(2000):
        assert abs(observe_residual(spec, x, 0, rng)[0] - truth) <= 0.07


def test_observe_monte_carlo_mean():
    e_f = 0.1
    spec = make_spec(obs_law=ap.NoiseLaw(bound=e_f))
    rng = Xoshiro256pp.from_seed(9, 1)
    x = np.array([1.3])
    truth = residual(spec, x, spec.a_star(0))[0]
    n = 100_000
    draws = np.array([observe_residual(spec, x, 0, rng)[0] for _ in range(n)])
    assert abs(draws.mean() - truth) <= 5.0 * e_f / math.sqrt(n)


def test_step_with_is_step_true_given_same_disturbance():
    spec = make_spec()
    rng = Xoshiro256pp.from_seed(3, 0)
    w = spec.w_law.sample(Xoshiro256pp.from_seed(3, 0), 1)
    assert step_true(spec, [1.0], [0.2], 0, rng)[0] == step_with(spec, np.array([1.0]), np.array([0.2]), 0, w)[0]


def test_spec_validation_errors():
    with pytest.raises(InvalidSpecError):
        make_spec(delta=0.0)
    with pytest.raises(InvalidSpecError):
        make_spec(cost=ap.CostWeights(q=1.0, r=0.2, lam=0.1, theta_bar=[5.0]))  # outside theta_set
    with pytest.raises(InvalidSpecError):
        make_spec(schedule=ap.Constant([3.0]))  # outside a_set
    with pytest.raises(InvalidSpecError):
        make_spec(x0=[np.nan])
    with pytest.raises(InvalidSpecError):
        make_spec(horizon=-1)
    with pytest.raises(InvalidSpecError):
        make_spec(a_set=ap.Box([-2.0, -2.0], [2.0, 2.0]))  # p mismatch vs Linear


def test_dimension_mismatch_in_ops(spec):
    with pytest.raises(InvalidSpecError):
        residual(spec, [1.0, 2.0], [0.5])
    with pytest.raises(InvalidSpecError):
        residual(spec, [1.0], [0.5, 0.5])


def test_sanity_warnings_flag_noncontractive_gains(caplog):
    spec = make_spec(
        theta_set=ap.Box([-1.0], [2.0]),
        cost=ap.CostWeights(q=1.0, r=0.2, lam=0.1, theta_bar=[1.0]),
    )
    with caplog.at_level(logging.WARNING):
        msgs = sanity_warnings(spec)
    assert any("contractive" in m for m in msgs)


def test_sanity_warnings_quiet_for_good_config(spec):
    assert sanity_warnings(spec) == []


def test_sanity_warnings_flag_oversized_disturbance():
    spec = make_spec(
        feature_map=ap.Sinusoid([3.0]),
        a_set=ap.Box([-2.0], [2.0]),
        schedule=ap.Constant([0.5]),
        w_law=ap.NoiseLaw(bound=0.25),
    )
    msgs = sanity_warnings(spec)
    assert any("Taylor" in m for m in msgs)
