"""Adam training of the basis against the PDE residual.

During training ``omega`` is held at all ones and only the network
parameters move. Training stops once ``loss / initial_loss <= epsilon`` or
after ``n_max`` epochs, where each epoch is one full-batch Adam update
followed by a loss evaluation at the updated parameters.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .autodiff import ResidualTerm, loss_and_param_grad, loss_value
from .errors import ConfigurationError, TrainingError
from .network import MlpConfig, Params, init_elm
from .problems import PdeProblem
from .sampling import CollocationSet, QuadratureSet

log = logging.getLogger(__name__)

PointSet = Union[CollocationSet, QuadratureSet]


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError(f"Adam betas must lie in [0, 1), got {self.beta1}, {self.beta2}")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray, cfg: AdamConfig = AdamConfig()):
    """One bias-corrected Adam update. Returns ``(new_state, new_theta)``; inputs are untouched."""
    if grad.shape != theta.shape:
        raise ConfigurationError(f"gradient shape {grad.shape} does not match parameter shape {theta.shape}")
    t = state.t + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    theta = theta - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return AdamState(m, v, t), theta


@dataclass(frozen=True)
class TrainConfig:
    form: str = "discrete"
    epsilon: float = 1e-3
    n_max: int = 5000
    include_boundary_loss: bool = False
    penalty: float = 1.0
    adam: AdamConfig = field(default_factory=AdamConfig)

    def __post_init__(self):
        if self.form not in ("discrete", "integral"):
            raise ConfigurationError(f"training form must be 'discrete' or 'integral', got {self.form!r}")
        if not 0 < self.epsilon <= 1:
            raise ConfigurationError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.n_max < 1:
            raise ConfigurationError(f"n_max must be >= 1, got {self.n_max}")
        if self.penalty < 0:
            raise ConfigurationError(f"penalty must be >= 0, got {self.penalty}")


@dataclass
class TrainReport:
    epochs_used: int
    loss_history: list[float]
    initial_loss: float
    stop_reason: str

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1] if self.loss_history else self.initial_loss

    @property
    def final_ratio(self) -> float:
        return self.final_loss / self.initial_loss if self.initial_loss > 0 else 0.0

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss", "ratio"])
            w.writerow([0, repr(self.initial_loss), repr(1.0 if self.initial_loss > 0 else 0.0)])
            for k, val in enumerate(self.loss_history, start=1):
                w.writerow([k, repr(val), repr(val / self.initial_loss if self.initial_loss > 0 else 0.0)])


# ---------------------------------------------------------------------------
# loss construction
# ---------------------------------------------------------------------------


def pde_term(problem: PdeProblem, points: np.ndarray, weights) -> ResidualTerm:
    return ResidualTerm((problem.operator.block(points),), problem.f(points), weights)


def discrete_terms(problem: PdeProblem, colloc: CollocationSet, include_boundary: bool = False, penalty: float = 1.0):
    """Terms of the mean-square collocation loss (plus ``penalty`` times the mean boundary loss)."""
    if colloc.N == 0:
        raise ConfigurationError("the interior collocation set is empty")
    terms = [pde_term(problem, colloc.interior, 1.0 / colloc.N)]
    if include_boundary and colloc.N_bar:
        w = penalty / colloc.N_bar
        terms += [ResidualTerm(g.blocks(), g.target, w) for g in colloc.groups]
    return terms


def integral_terms(problem: PdeProblem, quad: QuadratureSet, include_boundary: bool = False, penalty: float = 1.0):
    """Terms of the quadrature loss ``||Au - f||^2_{L2}`` (plus ``penalty ||Bu - g||^2`` on the boundary)."""
    if quad.N == 0:
        raise ConfigurationError("the interior quadrature set is empty")
    terms = [pde_term(problem, quad.interior, quad.weights)]
    if include_boundary:
        for g in quad.groups:
            if g.weights is None:
                raise ConfigurationError(f"condition group {g.name!r} has no quadrature weights")
            terms.append(ResidualTerm(g.blocks(), g.target, penalty * g.weights))
    return terms


def loss_terms(problem: PdeProblem, points: PointSet, form: str, include_boundary: bool = False, penalty: float = 1.0):
    if form == "discrete":
        return discrete_terms(problem, points, include_boundary, penalty)
    if form == "integral":
        if not isinstance(points, QuadratureSet):
            raise ConfigurationError("the integral form needs a quadrature point set")
        return integral_terms(problem, points, include_boundary, penalty)
    raise ConfigurationError(f"unknown loss form {form!r}")


def loss_discrete(params, omega, problem, colloc, include_boundary=False, penalty=1.0) -> float:
    return loss_value(params, omega, discrete_terms(problem, colloc, include_boundary, penalty))


def loss_integral(params, omega, problem, quad, include_boundary=False, penalty=1.0) -> float:
    return loss_value(params, omega, integral_terms(problem, quad, include_boundary, penalty))


# ---------------------------------------------------------------------------
# training loops
# ---------------------------------------------------------------------------


def _check_finite(value: float, epoch: int) -> None:
    if not np.isfinite(value):
        raise TrainingError(f"loss became non-finite ({value}) at epoch {epoch}", epoch=epoch)


def train_terms(
    params: Params,
    terms: Sequence[ResidualTerm],
    epsilon: float = 1e-3,
    n_max: int = 5000,
    adam: AdamConfig = AdamConfig(),
    omega: np.ndarray | None = None,
    callback: Callable[[int, float], None] | None = None,
) -> tuple[Params, TrainReport]:
    """Minimise the loss given by ``terms`` over the network parameters with ``omega`` fixed."""
    params = params.copy()
    omega = np.ones(params.M) if omega is None else np.asarray(omega, dtype=np.float64)
    lg = loss_and_param_grad(params, omega, terms)
    initial = lg.value
    _check_finite(initial, 0)
    history: list[float] = []
    if initial == 0.0:
        return params, TrainReport(0, history, initial, "converged")
    state = AdamState.zeros(params.flat.size)
    for epoch in range(1, n_max + 1):
        state, params.flat[...] = adam_step(state, params.flat, lg.grad.flat, adam)
        lg = loss_and_param_grad(params, omega, terms)
        _check_finite(lg.value, epoch)
        history.append(lg.value)
        if callback is not None:
            callback(epoch, lg.value)
        if lg.value / initial <= epsilon:
            log.debug("converged after %d epochs (ratio %.3e)", epoch, lg.value / initial)
            return params, TrainReport(epoch, history, initial, "converged")
    return params, TrainReport(n_max, history, initial, "max_epochs")


def train(
    params: Params,
    problem: PdeProblem,
    points: PointSet,
    cfg: TrainConfig = TrainConfig(),
    callback: Callable[[int, float], None] | None = None,
) -> tuple[Params, TrainReport]:
    """Train the basis with ``omega = 1`` until the relative-loss rule or ``n_max`` stops it."""
    terms = loss_terms(problem, points, cfg.form, cfg.include_boundary_loss, cfg.penalty)
    return train_terms(params, terms, cfg.epsilon, cfg.n_max, cfg.adam, callback=callback)


def train_baseline(
    params: Params,
    problem: PdeProblem,
    points: PointSet,
    form: str,
    n_epochs: int,
    penalty: float = 1.0,
    adam: AdamConfig = AdamConfig(),
    omega: np.ndarray | None = None,
    callback: Callable[[int, float], None] | None = None,
) -> tuple[Params, np.ndarray, TrainReport]:
    """PINN (discrete) / DGM (integral) baseline: penalised residual loss, ``theta`` and ``omega`` trained jointly for a fixed number of epochs."""
    terms = loss_terms(problem, points, form, include_boundary=True, penalty=penalty)
    params = params.copy()
    omega = np.ones(params.M) if omega is None else np.asarray(omega, dtype=np.float64).copy()
    n_theta = params.flat.size
    lg = loss_and_param_grad(params, omega, terms, with_omega=True)
    initial = lg.value
    _check_finite(initial, 0)
    state = AdamState.zeros(n_theta + omega.size)
    history: list[float] = []
    for epoch in range(1, n_epochs + 1):
        joint = np.concatenate([params.flat, omega])
        state, joint = adam_step(state, joint, np.concatenate([lg.grad.flat, lg.omega_grad]), adam)
        params.flat[...] = joint[:n_theta]
        omega = joint[n_theta:]
        lg = loss_and_param_grad(params, omega, terms, with_omega=True)
        _check_finite(lg.value, epoch)
        history.append(lg.value)
        if callback is not None:
            callback(epoch, lg.value)
    return params, omega, TrainReport(n_epochs, history, initial, "max_epochs")


def elm_mode(cfg: MlpConfig, r_m: float = 1.0) -> tuple[Params, TrainReport]:
    """Random fixed basis with zero training epochs."""
    if cfg.hidden_widths:
        log.warning("ELM mode is meant for networks without hidden layers; got %s", list(cfg.hidden_widths))
    return init_elm(cfg, r_m), TrainReport(0, [], float("nan"), "untrained")
