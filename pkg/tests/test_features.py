import numpy as np
import pytest

from adaptive_polyopt.derivatives import fd_jacobian
from adaptive_polyopt.errors import InvalidSpecError
from adaptive_polyopt.features import Linear, Polynomial, Sinusoid, Tanh, derivative_sups

ALL_MAPS = [Linear(), Polynomial(4), Sinusoid([1.0, 2.2, 0.5]), Tanh([0.7, 1.3])]


@pytest.mark.parametrize("fm", ALL_MAPS)
def test_first_derivative_matches_fd(fm):
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.uniform(-2, 2)
        fd = fd_jacobian(lambda z: fm.value(z[0]), np.array([x]), h=1e-6)[:, 0]
        assert np.allclose(fm.d1(x), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("fm", ALL_MAPS)
def test_second_derivative_matches_fd(fm):
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.uniform(-2, 2)
        fd = fd_jacobian(lambda z: fm.d1(z[0]), np.array([x]), h=1e-6)[:, 0]
        assert np.allclose(fm.d2(x), fd, rtol=1e-5, atol=1e-6)


def test_polynomial_degree_one_is_linear():
    xs = np.linspace(-2, 2, 9)
    assert np.array_equal(Polynomial(1).value(xs), Linear().value(xs))
    assert np.array_equal(Polynomial(1).d1(xs), Linear().d1(xs))


def test_vectorized_evaluation_matches_scalar():
    fm = Sinusoid([1.0, 2.2])
    xs = np.linspace(-1, 1, 7)
    batch = fm.value(xs)
    for i, x in enumerate(xs):
        assert np.array_equal(batch[i], fm.value(x))


def test_out_dims():
    assert Linear().out_dim == 1
    assert Polynomial(3).out_dim == 3
    assert Sinusoid([1.0, 2.0]).out_dim == 2
    assert Tanh([0.5]).out_dim == 1


def test_sinusoid_zero_at_origin():
    assert np.all(Sinusoid([1.0, 3.0]).value(0.0) == 0.0)


def test_derivative_sups_linear():
    sup1, sup2 = derivative_sups(Linear(), -2.0, 2.0)
    assert sup1 == 1.0 and sup2 == 0.0


def test_derivative_sups_sinusoid():
    sup1, sup2 = derivative_sups(Sinusoid([2.0]), -3.0, 3.0)
    assert sup1 == pytest.approx(2.0, abs=1e-3)
    assert sup2 == pytest.approx(4.0, abs=1e-2)


def test_invalid_constructions():
    with pytest.raises(InvalidSpecError):
        Polynomial(0)
    with pytest.raises(InvalidSpecError):
        Sinusoid([])
    with pytest.raises(InvalidSpecError):
        Tanh([])
