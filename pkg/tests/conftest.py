import numpy as np
import pytest

import adaptive_polyopt as ap


def make_spec(**overrides):
    """Scalar benchmark instance with overridable fields."""
    args = dict(
        delta=0.1,
        feature_map=ap.Linear(),
        cost=ap.CostWeights(q=1.0, r=0.2, lam=0.1, theta_bar=[1.0]),
        theta_set=ap.Box([0.2], [2.0]),
        a_set=ap.Box([-2.0], [2.0]),
        x0=[1.0],
        w_law=ap.NoiseLaw(bound=0.1),
        obs_law=ap.NoiseLaw(bound=0.05),
        schedule=ap.Constant([0.8]),
        horizon=200,
    )
    args.update(overrides)
    return ap.SystemSpec(**args)


def quiet_spec(**overrides):
    """Deterministic variant: no disturbance, no observation noise."""
    base = dict(w_law=ap.NoiseLaw(bound=0.0), obs_law=ap.NoiseLaw(bound=0.0))
    base.update(overrides)
    return make_spec(**base)


@pytest.fixture
def spec():
    return make_spec()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
