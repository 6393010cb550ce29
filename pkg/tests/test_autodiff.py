import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from snnpde.autodiff import (
    Block,
    DiffConfig,
    ResidualTerm,
    forward,
    forward_with_input_derivs,
    loss_and_param_grad,
    loss_value,
    point_derivatives,
)
from snnpde.errors import ConfigurationError, ConstructionError
from snnpde.network import MlpConfig, Params

from conftest import random_params


def _fd_input_derivs(params, x, h):
    d = x.shape[1]
    g, hs = [], []
    f0 = forward(params, x, order=0).phi
    for p in range(d):
        e = np.zeros(d)
        e[p] = h
        fp = forward(params, x + e, order=0).phi
        fm = forward(params, x - e, order=0).phi
        g.append((fp - fm) / (2 * h))
        hs.append((fp - 2 * f0 + fm) / (h * h))
    return np.array(g), np.array(hs)


def test_zero_network_is_zero():
    p = Params.zeros(MlpConfig(d=2, hidden_widths=(4, 3), M=5).layer_shapes())
    be = forward(p, np.random.default_rng(0).normal(size=(6, 2)), order=2)
    for arr in (be.phi, be.grad, be.hess):
        np.testing.assert_array_equal(arr, 0.0)


def test_single_tanh_unit():
    p = Params.zeros([(1, 1)])
    p.weights[0][...] = 1.0
    phi, g, h = point_derivatives(p, [0.0])
    np.testing.assert_array_equal([phi[0], g[0, 0], h[0, 0]], [0.0, 1.0, 0.0])
    t = np.tanh(1.0)
    phi, g, h = point_derivatives(p, [1.0])
    np.testing.assert_allclose([phi[0], g[0, 0], h[0, 0]], [t, 1 - t * t, -2 * t * (1 - t * t)], rtol=1e-15)


def test_input_derivatives_fd_two_hidden_layers(rng):
    p = random_params(rng, 2, (6, 5), 4)
    x = rng.uniform(-1, 1, size=(8, 2))
    be = forward_with_input_derivs(p, x, DiffConfig(2))
    g1, _ = _fd_input_derivs(p, x, 1e-5)
    np.testing.assert_allclose(be.grad, g1, rtol=1e-6, atol=1e-9)
    # second differences need a larger step to stay above rounding noise
    _, h2 = _fd_input_derivs(p, x, 1e-4)
    np.testing.assert_allclose(be.hess, h2, rtol=1e-5, atol=2e-6)


def test_dimension_mismatch(small_params):
    with pytest.raises(ConfigurationError):
        forward(small_params, np.zeros((3, 3)))
    with pytest.raises(ConfigurationError):
        forward(small_params, np.zeros((3, 2)), order=3)
    with pytest.raises(ConfigurationError):
        DiffConfig(max_input_order=4)


def test_order_truncation(small_params, rng):
    x = rng.uniform(size=(4, 2))
    full = forward(small_params, x, order=2)
    for order in (0, 1):
        be = forward(small_params, x, order=order)
        assert be.order == order
        np.testing.assert_array_equal(be.phi, full.phi)
    np.testing.assert_array_equal(forward(small_params, x, order=1).grad, full.grad)


def test_deterministic(small_params, rng):
    x = rng.uniform(size=(10, 2))
    a, b = forward(small_params, x), forward(small_params, x)
    np.testing.assert_array_equal(a.hess, b.hess)


def test_identity_last_layer_scales_linearly(rng):
    p = random_params(rng, 2, (4,), 3)
    x = rng.uniform(size=(5, 2))
    base = forward(p, x, order=2, last_activation="identity")
    q = p.copy()
    q.weights[-1][...] *= 2.5
    q.biases[-1][...] *= 2.5
    scaled = forward(q, x, order=2, last_activation="identity")
    np.testing.assert_allclose(scaled.grad, 2.5 * base.grad, rtol=1e-14)
    np.testing.assert_allclose(scaled.hess, 2.5 * base.hess, rtol=1e-14)


# ---------------------------------------------------------------------------
# parameter gradients
# ---------------------------------------------------------------------------


def _fd_param_grad(params, omega, terms, h=1e-6):
    g = np.zeros(params.flat.size)
    for i in range(params.flat.size):
        q = params.copy()
        q.flat[i] += h
        lp = loss_value(q, omega, terms)
        q.flat[i] -= 2 * h
        lm = loss_value(q, omega, terms)
        g[i] = (lp - lm) / (2 * h)
    return g


def _helmholtz_like_terms(rng, n=5):
    x = rng.uniform(0, 2, size=(n, 1))
    blk = Block(x, c0=-10.0 * np.ones(n), c2=np.ones((1, n)))
    bnd = Block(np.array([[0.0], [2.0]]), c0=np.ones(2))
    return [ResidualTerm((blk,), rng.normal(size=n), 1.0 / n), ResidualTerm((bnd,), [1.0, -0.5], 0.7)]


def test_constant_loss_has_zero_gradient(small_params):
    # omega = 0 makes every residual equal to -target, independent of the parameters
    x = np.random.default_rng(1).uniform(size=(4, 2))
    terms = [ResidualTerm((Block(x, c0=np.ones(4), c2=np.ones((2, 4))),), 3.0, 1.0)]
    lg = loss_and_param_grad(small_params, np.zeros(3), terms)
    assert lg.value == pytest.approx(36.0)
    np.testing.assert_array_equal(lg.grad.flat, 0.0)


def test_single_unit_gradient_at_origin():
    p = Params.zeros([(1, 1)])
    p.weights[0][...] = 1.0
    terms = [ResidualTerm((Block(np.array([[0.0]]), c0=np.ones(1)),), 0.0, 1.0)]
    lg = loss_and_param_grad(p, np.ones(1), terms)
    np.testing.assert_array_equal(lg.grad.flat, 0.0)


def test_second_order_loss_gradient_fd(rng):
    p = random_params(rng, 1, (6, 5), 4)
    omega = rng.normal(size=4)
    terms = _helmholtz_like_terms(rng)
    lg = loss_and_param_grad(p, omega, terms)
    fd = _fd_param_grad(p, omega, terms)
    np.testing.assert_allclose(lg.value, loss_value(p, omega, terms), rtol=1e-14)
    np.testing.assert_allclose(lg.grad.flat, fd, rtol=1e-5, atol=1e-7 * np.abs(fd).max())


def test_mixed_first_order_and_periodic_gradient_fd(rng):
    p = random_params(rng, 2, (5,), 3)
    omega = rng.normal(size=3)
    x = rng.uniform(-1, 1, size=(6, 2))
    pde = Block(x, c1=np.vstack([2.0 * np.ones(6), np.ones(6)]))
    left = np.column_stack([-np.ones(3), rng.uniform(size=3)])
    right = left.copy()
    right[:, 0] = 1.0
    terms = [
        ResidualTerm((pde,), 0.0, rng.uniform(0.1, 1, size=6)),
        ResidualTerm((Block(left, c0=np.ones(3)), Block(right, c0=-np.ones(3))), 0.0, 0.3),
    ]
    lg = loss_and_param_grad(p, omega, terms, with_omega=True)
    fd = _fd_param_grad(p, omega, terms)
    np.testing.assert_allclose(lg.grad.flat, fd, rtol=1e-5, atol=1e-7 * np.abs(fd).max())
    # omega gradient against central differences too
    h = 1e-6
    fo = [(loss_value(p, omega + h * e, terms) - loss_value(p, omega - h * e, terms)) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(lg.omega_grad, fo, rtol=1e-6)


def test_rejects_unsupported_primitives(small_params):
    with pytest.raises(ConstructionError):
        loss_value(small_params, np.ones(3), [lambda p: 0.0])
    with pytest.raises(ConstructionError):
        ResidualTerm((), 0.0, 1.0)
    with pytest.raises(ConstructionError):
        Block(np.zeros((3, 2)), c0=np.ones(2))


@given(seed=st.integers(0, 10_000), c=st.floats(0.1, 10))
def test_loss_nonnegative_and_homogeneous(seed, c):
    rng = np.random.default_rng(seed)
    p = random_params(rng, 1, (3,), 2)
    terms = _helmholtz_like_terms(rng, n=4)
    omega = rng.normal(size=2)
    val = loss_value(p, omega, terms)
    assert val >= 0.0
    scaled = [ResidualTerm(t.blocks, t.target, c * t.weights) for t in terms]
    np.testing.assert_allclose(loss_value(p, omega, scaled), c * val, rtol=1e-13)
