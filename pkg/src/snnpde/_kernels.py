"""Hot elementwise kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import time. Set ``SNNPDE_DISABLE_NUMBA=1``
to force the numpy path (also used automatically when numba is missing).
Both implementations are always importable as ``*_numpy`` / ``*_numba`` so
they can be benchmarked and cross-checked against each other.

Stream layout used throughout: an array of shape ``(S, N, n)`` where
``S = 1`` (values only), ``1 + d`` (values + first derivatives) or
``1 + 2d`` (values + first derivatives + pure second derivatives), and the
streams are ordered ``[value, d/dx_1 .. d/dx_d, d2/dx_1^2 .. d2/dx_d^2]``.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLE = os.environ.get("SNNPDE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLE


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# tanh layer: forward propagation of value / first / second derivative streams
# ---------------------------------------------------------------------------


def tanh_forward_numpy(z: np.ndarray, d: int) -> np.ndarray:
    """Apply tanh to the pre-activation streams ``z`` (shape ``(S, N, n)``)."""
    s = z.shape[0]
    y = np.empty_like(z)
    a = np.tanh(z[0])
    y[0] = a
    if s == 1:
        return y
    s1 = 1.0 - a * a
    zg = z[1 : 1 + d]
    y[1 : 1 + d] = s1 * zg
    if s > 1 + d:
        s2 = -2.0 * a * s1
        y[1 + d :] = s1 * z[1 + d :] + s2 * (zg * zg)
    return y


def tanh_backward_numpy(ybar: np.ndarray, a: np.ndarray, z: np.ndarray, d: int) -> np.ndarray:
    """Pull the stream adjoints ``ybar`` back through the tanh layer.

    ``a`` is the stored activation ``tanh(z[0])``; returns ``zbar``.
    """
    s = z.shape[0]
    zbar = np.empty_like(z)
    s1 = 1.0 - a * a
    abar = ybar[0].copy()
    if s > 1:
        zg = z[1 : 1 + d]
        gbar = ybar[1 : 1 + d]
        zbar[1 : 1 + d] = s1 * gbar
        s1bar = np.sum(zg * gbar, axis=0)
        if s > 1 + d:
            s2 = -2.0 * a * s1
            hbar = ybar[1 + d :]
            zbar[1 + d :] = s1 * hbar
            s1bar += np.sum(z[1 + d :] * hbar, axis=0)
            s2bar = np.sum(zg * zg * hbar, axis=0)
            zbar[1 : 1 + d] += 2.0 * s2 * zg * hbar
            abar += -2.0 * s1 * s2bar
            s1bar += -2.0 * a * s2bar
        abar += -2.0 * a * s1bar
    zbar[0] = s1 * abar
    return zbar


if HAVE_NUMBA:

    @nb.njit(cache=True, fastmath=False)
    def _tanh_streams_numba(z, a, d):
        s, n_pts, width = z.shape
        y = np.empty_like(z)
        second = s > 1 + d
        for i in range(n_pts):
            for j in range(width):
                av = a[i, j]
                y[0, i, j] = av
                if s == 1:
                    continue
                s1 = 1.0 - av * av
                s2 = -2.0 * av * s1
                for p in range(d):
                    zg = z[1 + p, i, j]
                    y[1 + p, i, j] = s1 * zg
                    if second:
                        y[1 + d + p, i, j] = s1 * z[1 + d + p, i, j] + s2 * (zg * zg)
        return y

    def tanh_forward_numba(z, d):
        # numpy's vectorized tanh is much faster than a scalar libm call per entry
        return _tanh_streams_numba(z, np.tanh(z[0]), d)

    @nb.njit(cache=True, fastmath=False)
    def tanh_backward_numba(ybar, a, z, d):
        s, n_pts, width = z.shape
        zbar = np.empty_like(z)
        second = s > 1 + d
        for i in range(n_pts):
            for j in range(width):
                av = a[i, j]
                s1 = 1.0 - av * av
                abar = ybar[0, i, j]
                if s > 1:
                    s2 = -2.0 * av * s1
                    s1bar = 0.0
                    s2bar = 0.0
                    for p in range(d):
                        zg = z[1 + p, i, j]
                        gbar = ybar[1 + p, i, j]
                        zgbar = s1 * gbar
                        s1bar += zg * gbar
                        if second:
                            hbar = ybar[1 + d + p, i, j]
                            zbar[1 + d + p, i, j] = s1 * hbar
                            s1bar += z[1 + d + p, i, j] * hbar
                            s2bar += zg * zg * hbar
                            zgbar += 2.0 * s2 * zg * hbar
                        zbar[1 + p, i, j] = zgbar
                    if second:
                        abar += -2.0 * s1 * s2bar
                        s1bar += -2.0 * av * s2bar
                    abar += -2.0 * av * s1bar
                zbar[0, i, j] = s1 * abar
        return zbar

else:  # pragma: no cover
    tanh_forward_numba = tanh_forward_numpy
    tanh_backward_numba = tanh_backward_numpy


# ---------------------------------------------------------------------------
# Legendre roots by Newton iteration
# ---------------------------------------------------------------------------


def legendre_newton_numpy(q: int, tol: float, max_iter: int):
    """Roots of P_q and the derivative P_q' at those roots."""
    k = np.arange(1, q + 1, dtype=np.float64)
    x = np.cos(np.pi * (k - 0.25) / (q + 0.5))
    dp = np.ones(q)
    for _ in range(max_iter):
        p0 = np.ones(q)
        p1 = x.copy()
        for m in range(2, q + 1):
            p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
        dp = q * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) <= tol:
            break
    # derivative at the converged nodes
    p0 = np.ones(q)
    p1 = x.copy()
    for m in range(2, q + 1):
        p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
    dp = q * (x * p1 - p0) / (x * x - 1.0)
    return x, dp


if HAVE_NUMBA:

    @nb.njit(cache=True)
    def legendre_newton_numba(q, tol, max_iter):
        x = np.empty(q)
        dp = np.empty(q)
        for r in range(q):
            xr = math.cos(math.pi * (r + 0.75) / (q + 0.5))
            dpr = 1.0
            for it in range(max_iter + 1):
                p0 = 1.0
                p1 = xr
                for m in range(2, q + 1):
                    p0, p1 = p1, ((2 * m - 1) * xr * p1 - (m - 1) * p0) / m
                dpr = q * (xr * p1 - p0) / (xr * xr - 1.0)
                if it == max_iter:
                    break
                dx = p1 / dpr
                xr -= dx
                if abs(dx) <= tol:
                    # refresh derivative at the accepted node
                    p0 = 1.0
                    p1 = xr
                    for m in range(2, q + 1):
                        p0, p1 = p1, ((2 * m - 1) * xr * p1 - (m - 1) * p0) / m
                    dpr = q * (xr * p1 - p0) / (xr * xr - 1.0)
                    break
            x[r] = xr
            dp[r] = dpr
        return x, dp

else:  # pragma: no cover
    legendre_newton_numba = legendre_newton_numpy


if USE_NUMBA:
    tanh_forward = tanh_forward_numba
    tanh_backward = tanh_backward_numba
    legendre_newton = legendre_newton_numba
else:
    tanh_forward = tanh_forward_numpy
    tanh_backward = tanh_backward_numpy
    legendre_newton = legendre_newton_numpy
