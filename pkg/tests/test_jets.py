import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wmass.jets import Jet2, TensorJet, coordinates, distance, fd_jet, squared_distance


def _pts(seed=0, count=8, n=3, lo=0.5, hi=2.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(count, n))
    return x / np.linalg.norm(x, axis=1)[:, None] * rng.uniform(lo, hi, (count, 1))


def _assert_jet_matches_fd(expr, x):
    """Compare an analytic jet expression against finite differences of its value."""
    jet = expr(x)
    v, d1, d2 = fd_jet(lambda y: expr(y).value, x, 1e-3)
    scale = max(1.0, np.max(np.abs(v)))
    np.testing.assert_allclose(jet.value, v, rtol=1e-14)
    np.testing.assert_allclose(jet.grad, d1, atol=1e-8 * scale)
    np.testing.assert_allclose(jet.hess, d2, atol=1e-5 * scale)


def test_hessian_is_symmetrised():
    h = np.array([[[1.0, 2.0], [0.0, 3.0]]])
    j = Jet2(np.ones(1), np.zeros((1, 2)), h)
    np.testing.assert_array_equal(j.hess, np.swapaxes(j.hess, -1, -2))
    again = Jet2(j.value, j.grad, j.hess)
    np.testing.assert_array_equal(again.hess, j.hess)


@pytest.mark.parametrize("expr", [
    lambda x: squared_distance(x) ** -0.5,
    lambda x: (coordinates(x)[0] * coordinates(x)[1]).exp(),
    lambda x: (squared_distance(x) + 1.0).log() * coordinates(x)[2],
    lambda x: distance(x).sqrt() / (1.0 + coordinates(x)[0] ** 2),
    lambda x: 2.0 - coordinates(x)[1] * 3.0,
], ids=["inverse_r", "exp_product", "log_times_coord", "quotient", "affine"])
def test_jet_algebra_matches_finite_differences(expr):
    _assert_jet_matches_fd(expr, _pts())


@given(st.floats(-2.5, 2.5), st.integers(0, 2))
def test_power_chain_rule(p, axis):
    x = _pts(seed=1)
    _assert_jet_matches_fd(lambda y: (squared_distance(y) + coordinates(y)[axis] * 0.3 + 1.0) ** p, x)


def test_tensor_jet_scale_product_rule():
    x = _pts(seed=2)

    def expr(y):
        X = coordinates(y)
        t = TensorJet.from_components([[X[0] * X[1], X[2], X[0]],
                                       [X[2], X[1] ** 2, X[1]],
                                       [X[0], X[1], X[2] * 2.0]])
        return t.scale(squared_distance(y).exp() * 0.1)

    t = expr(x)
    v, d1, d2 = fd_jet(lambda y: expr(y).value, x, 1e-3)
    np.testing.assert_allclose(t.d1, d1, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(t.d2, d2, rtol=1e-5, atol=1e-6)


def test_fd_first_derivatives_are_fourth_order():
    x = np.array([[0.7, -0.3, 1.1]])
    exact = (squared_distance(x) ** -0.5).grad

    def err(h):
        return np.max(np.abs(fd_jet(lambda y: np.sum(y ** 2, -1) ** -0.5, x, h)[1] - exact))

    ratio = err(0.04) / err(0.02)
    assert 12.0 < ratio < 20.0


def test_fd_second_derivatives_are_second_order():
    x = np.array([[0.7, -0.3, 1.1]])
    exact = (squared_distance(x) ** -0.5).hess

    def err(h):
        return np.max(np.abs(fd_jet(lambda y: np.sum(y ** 2, -1) ** -0.5, x, h)[2] - exact))

    ratio = err(0.04) / err(0.02)
    assert 3.5 < ratio < 4.5
