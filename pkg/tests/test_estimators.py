import math

import numpy as np
import pytest

import adaptive_polyopt as ap
from adaptive_polyopt.errors import InvalidSpecError
from adaptive_polyopt.estimators import (
    EstSettings,
    EstState,
    default_iota,
    frozen_est,
    grad_est_update,
    mismatches,
    oracle_est,
)
from adaptive_polyopt.rng import Xoshiro256pp
from adaptive_polyopt.system import feature_matrix, observe_residual, residual
from conftest import make_spec, quiet_spec


def test_zero_gradient_fixed_point(spec):
    st = EstState(a_hat=np.array([1.5]), iota=0.05)
    f_tilde = residual(spec, [2.0], [1.5])
    out = grad_est_update(spec, [2.0], f_tilde, st)
    assert out.a_hat[0] == 1.5


def test_hand_update():
    spec = make_spec(a_set=ap.Box([-10.0], [10.0]), schedule=ap.Constant([1.0]))
    st = EstState(a_hat=np.array([1.0]), iota=0.05)
    out = grad_est_update(spec, [2.0], [4.0], st)
    # gradient = 2*2*(2-4) = -8; a' = 1 + 0.4
    assert out.a_hat[0] == pytest.approx(1.4, abs=1e-15)


def test_zero_iota_freezes(spec):
    st = EstState(a_hat=np.array([0.7]), iota=0.0)
    out = grad_est_update(spec, [1.3], [9.9], st)
    assert out.a_hat[0] == 0.7


def test_estimate_stays_feasible(spec, rng):
    st = EstState(a_hat=np.array([0.0]), iota=0.5)
    for _ in range(200):
        x = rng.uniform(-2, 2, size=1)
        f_tilde = rng.uniform(-3, 3, size=1)
        st = grad_est_update(spec, x, f_tilde, st)
        assert spec.a_set.contains(st.a_hat)


def test_oracle_tracks_schedule():
    sch = ap.PiecewiseConstant([10], [[0.5], [1.5]])
    spec = make_spec(schedule=sch)
    assert oracle_est(spec, 0)[0] == 0.5
    assert oracle_est(spec, 9)[0] == 0.5
    assert oracle_est(spec, 10)[0] == 1.5
    e0, e1 = mismatches(spec, [1.2], oracle_est(spec, 4), spec.a_star(4))
    assert e0 == 0.0 and e1 == 0.0


def test_frozen_offset_projected():
    spec = make_spec()
    assert frozen_est(spec, 0.25)[0] == pytest.approx(1.05)
    assert frozen_est(spec, 100.0)[0] == 2.0  # clipped into the feasible set


def test_mismatch_examples(spec):
    assert mismatches(spec, [1.0], [0.8], [0.8]) == (0.0, 0.0)
    e0, e1 = mismatches(spec, [3.0], [1.0], [0.5])
    assert e0 == pytest.approx(1.5, abs=1e-12)
    assert e1 == pytest.approx(0.5, abs=1e-12)
    e0, e1 = mismatches(spec, [0.0], [1.0], [0.5])
    assert e0 == 0.0
    assert e1 == pytest.approx(0.5, abs=1e-12)


def test_noiseless_constant_loss_converges():
    spec = quiet_spec(schedule=ap.Constant([0.9]), horizon=600)
    rec = ap.run_meta(
        spec,
        ap.AlgSettings(kind="mgaps", eta=0.05),
        EstSettings(kind="gradient", iota=0.05),
        seed=5,
    )
    phi_sq_max = float(np.max(rec.xs**2))
    assert 0.05 <= 1.0 / (2.0 * phi_sq_max)  # iota within the convergent range
    assert np.all(rec.est_loss[-50:] < 1e-6)


def test_gradient_unbiased_monte_carlo():
    # E[grad | x, a_hat] equals the noiseless gradient within 2% over 1e5 draws
    e_f = 0.1
    spec = make_spec(obs_law=ap.NoiseLaw(bound=e_f), schedule=ap.Constant([1.2]))
    x = np.array([2.0])
    a_hat = np.array([0.9])
    phi = feature_matrix(spec, x)
    noiseless = 2.0 * phi.T @ (phi @ a_hat - residual(spec, x, spec.a_star(0)))
    rng = Xoshiro256pp.from_seed(21, 1)
    n = 100_000
    total = np.zeros(1)
    for _ in range(n):
        f_tilde = observe_residual(spec, x, 0, rng)
        total += 2.0 * phi.T @ (phi @ a_hat - f_tilde)
    assert np.linalg.norm(total / n - noiseless) <= 0.02 * np.linalg.norm(noiseless)


def test_default_iota_formula():
    assert default_iota(1.0, 0, 1.0) == 0.1
    t = 4800
    expected = math.sqrt(3.0 * 2.0 / t) / (2.0 * 1.5**2)
    assert default_iota(2.0, t, 1.5) == pytest.approx(expected)
    assert default_iota(100.0, 10, 1.0) == 0.1  # capped


def test_settings_validation():
    with pytest.raises(InvalidSpecError):
        EstSettings(kind="kalman")
    with pytest.raises(InvalidSpecError):
        EstSettings(kind="gradient", iota=-0.1)
    with pytest.raises(InvalidSpecError):
        EstSettings(feature_norm_bound=0.0)
