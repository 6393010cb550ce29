import os
import subprocess
import sys

import numpy as np
import pytest

from snnpde import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _streams(rng, d, n=7, width=5):
    return rng.normal(size=(1 + 2 * d, n, width))


@pytest.mark.parametrize("d", [1, 2])
def test_tanh_forward_numpy_analytic(d, rng):
    z = _streams(rng, d)
    y = _kernels.tanh_forward_numpy(z, d)
    a = np.tanh(z[0])
    s1 = 1 - a * a
    np.testing.assert_allclose(y[0], a)
    for p in range(d):
        np.testing.assert_allclose(y[1 + p], s1 * z[1 + p])
        np.testing.assert_allclose(y[1 + d + p], s1 * z[1 + d + p] - 2 * a * s1 * z[1 + p] ** 2)


@pytest.mark.parametrize("d", [1, 2])
def test_tanh_backward_numpy_is_adjoint(d, rng):
    # <ybar, J dz> == <J^T ybar, dz> with J from central differences of the forward map
    z = _streams(rng, d)
    ybar = rng.normal(size=z.shape)
    y = _kernels.tanh_forward_numpy(z, d)
    zbar = _kernels.tanh_backward_numpy(ybar, y[0], z, d)
    dz = rng.normal(size=z.shape)
    h = 1e-6
    jdz = (_kernels.tanh_forward_numpy(z + h * dz, d) - _kernels.tanh_forward_numpy(z - h * dz, d)) / (2 * h)
    np.testing.assert_allclose(np.sum(ybar * jdz), np.sum(zbar * dz), rtol=1e-7)


@needs_numba
@pytest.mark.parametrize("d,order", [(1, 0), (1, 1), (1, 2), (2, 1), (2, 2)])
def test_numba_matches_numpy(d, order, rng):
    z = rng.normal(size=(1 + order * d, 11, 6))
    yn = _kernels.tanh_forward_numpy(z, d)
    yb = _kernels.tanh_forward_numba(z, d)
    np.testing.assert_allclose(yb, yn, rtol=1e-15, atol=1e-15)
    ybar = rng.normal(size=z.shape)
    np.testing.assert_allclose(
        _kernels.tanh_backward_numba(ybar, yn[0], z, d),
        _kernels.tanh_backward_numpy(ybar, yn[0], z, d),
        rtol=1e-13,
        atol=1e-14,
    )


@needs_numba
@pytest.mark.parametrize("q", [1, 2, 7, 30, 64])
def test_legendre_numba_matches_numpy(q):
    xa, da = _kernels.legendre_newton_numpy(q, 1e-15, 100)
    xb, db = _kernels.legendre_newton_numba(q, 1e-15, 100)
    np.testing.assert_allclose(xb, xa, rtol=0, atol=1e-15)
    np.testing.assert_allclose(db, da, rtol=1e-13)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, SNNPDE_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from snnpde import _kernels; print(_kernels.backend())"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"
