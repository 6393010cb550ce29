"""Relative error norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UndefinedNormError


@dataclass(frozen=True)
class ErrorSummary:
    rel_l2: float
    rel_linf: float
    n_eval_points: int
    form: str


def _pair(approx, exact) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(approx, dtype=np.float64).ravel()
    e = np.asarray(exact, dtype=np.float64).ravel()
    if a.shape != e.shape or a.size == 0:
        raise ConfigurationError(f"error norm needs equal non-empty arrays, got {a.shape} and {e.shape}")
    return a, e


def rel_l2_discrete(approx, exact) -> float:
    """``||u - u*||_2 / ||u*||_2`` over the evaluation points."""
    a, e = _pair(approx, exact)
    den = np.linalg.norm(e)
    if den == 0.0:
        raise UndefinedNormError("relative L2 error undefined: exact values are identically zero")
    return float(np.linalg.norm(a - e) / den)


def rel_linf(approx, exact) -> float:
    """Relative sup-norm ``max|u - u*| / max|u*|``."""
    a, e = _pair(approx, exact)
    den = np.max(np.abs(e))
    if den == 0.0:
        raise UndefinedNormError("relative sup-norm error undefined: exact values are identically zero")
    return float(np.max(np.abs(a - e)) / den)


def rel_l2_integral(u_approx, u_exact, quad) -> float:
    """``sqrt(int |u - u*|^2) / sqrt(int |u*|^2)`` with the quadrature ``quad``.

    ``u_approx`` / ``u_exact`` are callables of the points or arrays of values
    at the quadrature points. ``quad`` needs ``weights`` and ``points`` (or
    ``nodes`` for a 1-D rule).
    """
    pts = getattr(quad, "points", None)
    if pts is None:
        pts = np.asarray(quad.nodes)[:, None]
    w = np.asarray(quad.weights)
    a = np.asarray(u_approx(pts) if callable(u_approx) else u_approx, dtype=np.float64).ravel()
    e = np.asarray(u_exact(pts) if callable(u_exact) else u_exact, dtype=np.float64).ravel()
    if a.shape != w.shape or e.shape != w.shape:
        raise ConfigurationError("values do not match the quadrature point count")
    den = float(np.dot(w, e * e))
    if den == 0.0:
        raise UndefinedNormError("relative L2 error undefined: exact solution has zero norm")
    return float(np.sqrt(np.dot(w, (a - e) ** 2) / den))
