"""Quadrature rules and dense least-squares helpers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import AssemblyError, ConfigurationError, NumericError

#: Relative singular-value cutoff used by :func:`solve_least_squares`.
RCOND = 1e-14

_GL_TOL = 1e-15
_GL_MAX_ITER = 100
_GL_MAX_POINTS = 64


@dataclass(frozen=True)
class QuadratureRule1D:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class QuadratureRule2D:
    points: np.ndarray  # (n, 2)
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=None)
def _gauss_legendre_cached(q: int) -> tuple[np.ndarray, np.ndarray]:
    x, dp = _kernels.legendre_newton(q, _GL_TOL, _GL_MAX_ITER)
    x = np.asarray(x, dtype=np.float64)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # exact symmetry; removes last-bit drift between mirrored roots
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[-1, 1]`` for ``1 <= q <= 64``."""
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= _GL_MAX_POINTS:
        raise ConfigurationError(f"Gauss-Legendre point count must be in [1, {_GL_MAX_POINTS}], got {q!r}")
    x, w = _gauss_legendre_cached(int(q))
    return x.copy(), w.copy()


def composite_rule(a: float, b: float, subintervals: int, q: int) -> QuadratureRule1D:
    """Composite Gauss-Legendre rule: ``subintervals`` equal pieces of ``[a, b]`` with ``q`` nodes each."""
    if not a < b:
        raise ConfigurationError(f"composite rule needs a < b, got a={a}, b={b}")
    if subintervals < 1:
        raise ConfigurationError(f"subinterval count must be >= 1, got {subintervals}")
    x, w = gauss_legendre(q)
    edges = np.linspace(a, b, subintervals + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (lo + hi) + half * x[None, :]).ravel()
    weights = (half * w[None, :]).ravel()
    return QuadratureRule1D(nodes=nodes, weights=weights, interval=(float(a), float(b)))


def tensor_rule(rx: QuadratureRule1D, ry: QuadratureRule1D) -> QuadratureRule2D:
    """Cartesian product rule; points are ordered with ``y`` varying fastest."""
    gx, gy = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
    wx, wy = np.meshgrid(rx.weights, ry.weights, indexing="ij")
    points = np.column_stack([gx.ravel(), gy.ravel()])
    return QuadratureRule2D(points=points, weights=(wx * wy).ravel())


def solve_least_squares(A: np.ndarray, b: np.ndarray, rcond: float = RCOND) -> np.ndarray:
    """Minimum-norm least-squares solution of ``A x = b`` through a thin SVD.

    Singular values below ``rcond * sigma_max`` are dropped, which gives
    pseudoinverse semantics on rank-deficient systems.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ConfigurationError(f"least squares needs a non-empty 2-D matrix, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise ConfigurationError(f"right-hand side shape {b.shape} does not match matrix rows {A.shape[0]}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise NumericError("least-squares system contains non-finite entries")
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1])
    keep = s > rcond * s[0]
    coef = (u[:, keep].T @ b) / s[keep]
    return vt[keep].T @ coef


def row_normalize(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale every row (and its rhs entry) by the row's max absolute value.

    Returns ``(A_scaled, b_scaled, scale)``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.max(np.abs(A), axis=1)
    bad = np.flatnonzero(~(scale > 0.0))
    if bad.size:
        raise AssemblyError(f"row {int(bad[0])} of the coefficient matrix is identically zero", row=int(bad[0]))
    return A / scale[:, None], b / scale, scale
