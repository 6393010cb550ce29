"""Exact input derivatives of the basis and parameter gradients of residual losses.

Input derivatives are carried forward analytically: for each layer the value,
the ``d`` first-derivative directions and the ``d`` pure second-derivative
directions travel together as one ``(S, N, width)`` stream array, so each
affine map is a single matmul. Only Hessian diagonals are propagated.

Parameter gradients are obtained by a reverse sweep over that same stream
recursion (not just the value recursion), which makes gradients of losses
that contain ``phi'`` and ``phi''`` exact.

Supported losses are sums of weighted squared linear residuals,

    L = sum_terms sum_i w_i * (sum_blocks (c0*u + c1.grad u + c2.diag-hess u)(x_bi) - t_i)^2,

with ``u = phi . omega``. Anything else is rejected with
:class:`~snnpde.errors.ConstructionError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigurationError, ConstructionError

if TYPE_CHECKING:
    from .network import Params

_ACTIVATIONS = ("tanh", "identity")


@dataclass(frozen=True)
class DiffConfig:
    max_input_order: int = 2
    want_param_grad: bool = False

    def __post_init__(self):
        if self.max_input_order not in (0, 1, 2):
            raise ConfigurationError(f"max_input_order must be 0, 1 or 2, got {self.max_input_order}")


@dataclass
class Tape:
    inputs: np.ndarray
    pre: list[np.ndarray]
    post: list[np.ndarray]
    d: int
    last_activation: str


@dataclass
class BasisEval:
    """Basis values ``phi`` (N, M); ``grad`` and ``hess`` are (d, N, M) or None."""

    phi: np.ndarray
    grad: np.ndarray | None
    hess: np.ndarray | None
    tape: Tape | None = None

    @property
    def order(self) -> int:
        return 2 if self.hess is not None else 1 if self.grad is not None else 0

    @property
    def n_points(self) -> int:
        return self.phi.shape[0]


def n_streams(order: int, d: int) -> int:
    return 1 + order * d


def _input_streams(points: np.ndarray, order: int) -> np.ndarray:
    n, d = points.shape
    y0 = np.zeros((n_streams(order, d), n, d))
    y0[0] = points
    if order >= 1:
        for p in range(d):
            y0[1 + p, :, p] = 1.0
    return y0


def _as_points(params: "Params", points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None] if params.d == 1 else x[None, :]
    if x.ndim != 2 or x.shape[1] != params.d:
        raise ConfigurationError(f"points of shape {np.shape(points)} do not match input dimension {params.d}")
    return x


def forward(
    params: "Params",
    points,
    order: int = 2,
    keep_tape: bool = False,
    last_activation: str = "tanh",
) -> BasisEval:
    """Evaluate the basis and its input derivatives up to ``order`` at ``points`` (N, d)."""
    if order not in (0, 1, 2):
        raise ConfigurationError(f"derivative order must be 0, 1 or 2, got {order}")
    if last_activation not in _ACTIVATIONS:
        raise ConfigurationError(f"unknown activation {last_activation!r}")
    x = _as_points(params, points)
    d = params.d
    y = _input_streams(x, order)
    pre, post = [], []
    last = params.n_layers - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        s, n, width = y.shape
        z = (y.reshape(s * n, width) @ w.T).reshape(s, n, w.shape[0])
        z[0] += b
        if k == last and last_activation == "identity":
            y = z.copy()
        else:
            y = _kernels.tanh_forward(z, d)
        if keep_tape:
            pre.append(z)
            post.append(y)
    tape = Tape(inputs=_input_streams(x, order), pre=pre, post=post, d=d, last_activation=last_activation) if keep_tape else None
    grad = y[1 : 1 + d] if order >= 1 else None
    hess = y[1 + d :] if order == 2 else None
    return BasisEval(phi=y[0], grad=grad, hess=hess, tape=tape)


def forward_with_input_derivs(params: "Params", points, cfg: DiffConfig = DiffConfig()) -> BasisEval:
    return forward(params, points, order=cfg.max_input_order, keep_tape=cfg.want_param_grad)


def point_derivatives(params: "Params", point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(phi (M,), dphi/dx_p (M, d), d2phi/dx_p^2 (M, d))`` at a single point."""
    x = np.asarray(point, dtype=np.float64).reshape(1, -1)
    be = forward(params, x, order=2)
    return be.phi[0], be.grad[:, 0, :].T, be.hess[:, 0, :].T


def backward(params: "Params", tape: Tape, ybar: np.ndarray) -> "Params":
    """Parameter gradient given adjoints of the output streams (S, N, M)."""
    grad = params.zeros_like()
    d = tape.d
    last = params.n_layers - 1
    for k in range(last, -1, -1):
        w = params.weights[k]
        z = tape.pre[k]
        if k == last and tape.last_activation == "identity":
            zbar = ybar
        else:
            zbar = _kernels.tanh_backward(ybar, tape.post[k][0], z, d)
        y_in = tape.post[k - 1] if k > 0 else tape.inputs
        s, n, width = zbar.shape
        zb2 = zbar.reshape(s * n, width)
        grad.weights[k][...] = zb2.T @ y_in.reshape(s * n, y_in.shape[2])
        grad.biases[k][...] = zbar[0].sum(axis=0)
        if k > 0:
            ybar = (zb2 @ w).reshape(s, n, w.shape[1])
    return grad


# ---------------------------------------------------------------------------
# residual losses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    """Linear differential functional ``c0*u + sum_p c1_p du/dx_p + sum_p c2_p d2u/dx_p^2`` at ``points``.

    Coefficients are per-point arrays: ``c0`` (n,), ``c1`` and ``c2`` (d, n);
    ``None`` means the term is absent.
    """

    points: np.ndarray
    c0: np.ndarray | None = None
    c1: np.ndarray | None = None
    c2: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ConstructionError(f"block points must be (n, d), got shape {pts.shape}")
        object.__setattr__(self, "points", pts)
        n, d = pts.shape
        for name, shape in (("c0", (n,)), ("c1", (d, n)), ("c2", (d, n))):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=np.float64)
            if arr.shape != shape:
                raise ConstructionError(f"coefficient {name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)

    @property
    def order(self) -> int:
        return 2 if self.c2 is not None else 1 if self.c1 is not None else 0


def linear_rows(be: BasisEval, c0=None, c1=None, c2=None) -> np.ndarray:
    """Matrix ``(L phi_j)(x_i)`` of shape (N, M) for the functional with the given coefficients."""
    rows = np.zeros_like(be.phi)
    if c0 is not None:
        rows += np.asarray(c0)[:, None] * be.phi
    for coef, streams, what in ((c1, be.grad, "first"), (c2, be.hess, "second")):
        if coef is None:
            continue
        if streams is None:
            raise ConfigurationError(f"operator needs {what} derivatives that were not evaluated")
        for p in range(streams.shape[0]):
            rows += np.asarray(coef[p])[:, None] * streams[p]
    return rows


@dataclass(frozen=True)
class ResidualTerm:
    """Weighted squared residual ``sum_i w_i (sum_b (L_b u)(x_bi) - target_i)^2``."""

    blocks: tuple[Block, ...]
    target: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks or not all(isinstance(b, Block) for b in blocks):
            raise ConstructionError("a residual term needs one or more Block instances")
        n = blocks[0].points.shape[0]
        if any(b.points.shape[0] != n for b in blocks):
            raise ConstructionError("all blocks of a residual term must have the same number of rows")
        tgt = np.broadcast_to(np.asarray(self.target, dtype=np.float64), (n,)).copy()
        wts = np.broadcast_to(np.asarray(self.weights, dtype=np.float64), (n,)).copy()
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "weights", wts)


@dataclass
class LossGrad:
    value: float
    grad: "Params"
    omega_grad: np.ndarray | None = None


def _check_terms(terms) -> list[ResidualTerm]:
    out = list(terms)
    for t in out:
        if not isinstance(t, ResidualTerm):
            raise ConstructionError(f"unsupported loss primitive {type(t).__name__}; only ResidualTerm is differentiable")
    return out


def residuals(params: "Params", omega: np.ndarray, term: ResidualTerm) -> np.ndarray:
    r = -term.target.copy()
    for blk in term.blocks:
        be = forward(params, blk.points, order=blk.order)
        r += linear_rows(be, blk.c0, blk.c1, blk.c2) @ omega
    return r


def loss_value(params: "Params", omega: np.ndarray, terms: Sequence[ResidualTerm]) -> float:
    total = 0.0
    for term in _check_terms(terms):
        r = residuals(params, omega, term)
        total += float(np.dot(term.weights, r * r))
    return total


def loss_and_param_grad(
    params: "Params",
    omega: np.ndarray,
    terms: Sequence[ResidualTerm],
    with_omega: bool = False,
) -> LossGrad:
    """Loss value and its exact gradient with respect to every weight and bias.

    With ``with_omega`` the gradient with respect to ``omega`` is returned too.
    """
    omega = np.asarray(omega, dtype=np.float64)
    terms = _check_terms(terms)
    grad = params.zeros_like()
    gomega = np.zeros_like(omega) if with_omega else None
    total = 0.0
    for term in terms:
        evals, rows = [], []
        r = -term.target.copy()
        for blk in term.blocks:
            be = forward(params, blk.points, order=blk.order, keep_tape=True)
            a = linear_rows(be, blk.c0, blk.c1, blk.c2)
            r += a @ omega
            evals.append(be)
            rows.append(a)
        total += float(np.dot(term.weights, r * r))
        rho = 2.0 * term.weights * r
        for blk, be, a in zip(term.blocks, evals, rows):
            d = blk.points.shape[1]
            ybar = np.zeros((n_streams(blk.order, d), be.n_points, params.M))
            if blk.c0 is not None:
                ybar[0] = np.outer(blk.c0 * rho, omega)
            if blk.c1 is not None:
                for p in range(d):
                    ybar[1 + p] = np.outer(blk.c1[p] * rho, omega)
            if blk.c2 is not None:
                for p in range(d):
                    ybar[1 + d + p] = np.outer(blk.c2[p] * rho, omega)
            g = backward(params, be.tape, ybar)
            grad.flat += g.flat
            if with_omega:
                gomega += a.T @ rho
    return LossGrad(value=total, grad=grad, omega_grad=gomega)
