"""Coefficient solve after training and the end-to-end driver.

Discrete form: one row per interior collocation point (``A phi_j (x_i) = f``)
followed by one row per condition point (``B phi_j = g``), ``N + N_bar`` rows.

Integral form: the interior Gram block ``int A phi_i A phi_j`` with rhs
``int A phi_i f``, stacked on the boundary Gram block where every condition
group contributes to one summed boundary functional, ``2M`` rows in total.

Both systems are row-normalized and solved jointly by minimum-norm least
squares.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .autodiff import forward
from .errors import ConfigurationError
from .linalg import QuadratureRule2D, composite_rule, row_normalize, solve_least_squares, tensor_rule
from .network import MlpConfig, Params, eval_solution, init_xavier
from .problems import PdeProblem, apply_condition, apply_operator
from .sampling import CollocationSet, QuadratureSet, uniform_grid
from .training import TrainConfig, TrainReport, elm_mode, train, train_baseline

log = logging.getLogger(__name__)

METHODS = ("snn-d", "snn-i", "elm", "pinn-baseline", "dgm-baseline")

EVAL_GRID_1D = 1001
EVAL_GRID_2D = 101
EVAL_QUAD_SUBINTERVALS = 50
EVAL_QUAD_POINTS = 5


@dataclass
class LinearSystem:
    A: np.ndarray
    b: np.ndarray
    row_tags: list[tuple[str, int, int]]  # (tag, start, stop)
    scaling: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def residual_norm(self, omega: np.ndarray) -> float:
        return float(np.linalg.norm(self.A @ omega - self.b))

    def raw(self) -> tuple[np.ndarray, np.ndarray]:
        """The system before row normalization."""
        if self.scaling is None:
            return self.A, self.b
        return self.A * self.scaling[:, None], self.b * self.scaling


def _finish(blocks: list[tuple[str, np.ndarray, np.ndarray]], normalize: bool) -> LinearSystem:
    tags, start = [], 0
    for tag, rows, _ in blocks:
        tags.append((tag, start, start + rows.shape[0]))
        start += rows.shape[0]
    A = np.concatenate([r for _, r, _ in blocks])
    b = np.concatenate([t for _, _, t in blocks])
    if not normalize:
        return LinearSystem(A, b, tags)
    A, b, scale = row_normalize(A, b)
    return LinearSystem(A, b, tags, scale)


def assemble_snnd(params: Params, problem: PdeProblem, colloc: CollocationSet, normalize: bool = True) -> LinearSystem:
    be = forward(params, colloc.interior, order=problem.operator.order)
    blocks = [("interior", apply_operator(problem.operator, be, colloc.interior), problem.f(colloc.interior))]
    for group in colloc.groups:
        rows, target = apply_condition(group, params)
        blocks.append((group.name, rows, target))
    return _finish(blocks, normalize)


def assemble_snni(params: Params, problem: PdeProblem, quad: QuadratureSet, normalize: bool = True) -> LinearSystem:
    be = forward(params, quad.interior, order=problem.operator.order)
    a_phi = apply_operator(problem.operator, be, quad.interior)
    w = quad.weights
    gram = a_phi.T @ (w[:, None] * a_phi)
    rhs = a_phi.T @ (w * problem.f(quad.interior))
    m = params.M
    gram_b = np.zeros((m, m))
    rhs_b = np.zeros(m)
    for group in quad.groups:
        if group.weights is None:
            raise ConfigurationError(f"condition group {group.name!r} has no quadrature weights")
        rows, target = apply_condition(group, params)
        gram_b += rows.T @ (group.weights[:, None] * rows)
        rhs_b += rows.T @ (group.weights * target)
    return _finish([("interior", gram, rhs), ("boundary", gram_b, rhs_b)], normalize)


def solve_omega(system: LinearSystem) -> np.ndarray:
    return solve_least_squares(system.A, system.b)


# ---------------------------------------------------------------------------
# error evaluation
# ---------------------------------------------------------------------------


def eval_points(problem: PdeProblem) -> np.ndarray:
    n = EVAL_GRID_1D if problem.d == 1 else EVAL_GRID_2D
    return uniform_grid(problem.domain, n, inclusive=True)


def eval_quadrature(problem: PdeProblem) -> QuadratureRule2D:
    rules = [
        composite_rule(lo, hi, EVAL_QUAD_SUBINTERVALS, EVAL_QUAD_POINTS)
        for lo, hi in zip(problem.domain.lows, problem.domain.highs)
    ]
    if problem.d == 1:
        return QuadratureRule2D(points=rules[0].nodes[:, None], weights=rules[0].weights)
    return tensor_rule(rules[0], rules[1])


@dataclass
class Errors:
    rel_l2_discrete: float
    rel_l2_integral: float
    rel_linf: float
    n_eval_points: int


def evaluate_errors(params: Params, omega: np.ndarray, problem: PdeProblem) -> Errors:
    pts = eval_points(problem)
    approx = eval_solution(params, omega, pts)
    exact = problem.exact(pts)
    quad = eval_quadrature(problem)
    l2_int = metrics.rel_l2_integral(eval_solution(params, omega, quad.points), problem.exact(quad.points), quad)
    return Errors(
        rel_l2_discrete=metrics.rel_l2_discrete(approx, exact),
        rel_l2_integral=l2_int,
        rel_linf=metrics.rel_linf(approx, exact),
        n_eval_points=len(pts),
    )


def error_field(params: Params, omega: np.ndarray, problem: PdeProblem) -> np.ndarray:
    """Columns: coordinates..., u_exact, u_approx, |error| on the evaluation grid."""
    pts = eval_points(problem)
    approx = eval_solution(params, omega, pts)
    exact = problem.exact(pts) if problem.exact is not None else np.full(len(pts), np.nan)
    return np.column_stack([pts, exact, approx, np.abs(approx - exact)])


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    method: str
    problem: str
    omega: np.ndarray
    epochs_used: int
    stop_reason: str
    initial_loss: float
    final_loss: float
    final_loss_ratio: float
    system_shape: tuple[int, int] | None
    residual_norm: float | None
    residual_norm_ones: float | None
    rel_l2: float | None = None
    rel_linf: float | None = None
    rel_l2_discrete: float | None = None
    rel_l2_integral: float | None = None
    error_form: str | None = None
    n_eval_points: int | None = None
    timing: dict = field(default_factory=dict)
    train_report: TrainReport | None = field(default=None, repr=False)
    params: Params | None = field(default=None, repr=False)

    @property
    def omega_dim(self) -> int:
        return int(self.omega.size)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "problem": self.problem,
            "omega_dim": self.omega_dim,
            "omega": [float(v) for v in self.omega],
            "epochs_used": int(self.epochs_used),
            "stop_reason": self.stop_reason,
            "initial_loss": _num(self.initial_loss),
            "final_loss": _num(self.final_loss),
            "final_loss_ratio": _num(self.final_loss_ratio),
            "system_shape": list(self.system_shape) if self.system_shape else None,
            "residual_norm": _num(self.residual_norm),
            "residual_norm_ones": _num(self.residual_norm_ones),
            "rel_l2": _num(self.rel_l2),
            "rel_linf": _num(self.rel_linf),
            "rel_l2_discrete": _num(self.rel_l2_discrete),
            "rel_l2_integral": _num(self.rel_l2_integral),
            "error_form": self.error_form,
            "n_eval_points": self.n_eval_points,
            "timing": dict(self.timing),
        }
        return out


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


def snn_solve(
    problem: PdeProblem,
    net_cfg: MlpConfig,
    train_cfg: TrainConfig,
    points: CollocationSet | QuadratureSet,
    method: str = "snn-d",
    r_m: float = 1.0,
    baseline_epochs: int | None = None,
    callback=None,
) -> SolveReport:
    """Initialise, train, assemble, solve and score one run.

    ``method`` selects the pipeline: ``snn-d`` / ``snn-i`` (train with
    ``omega = 1`` then least squares), ``elm`` (random basis, no training,
    discrete system), ``pinn-baseline`` / ``dgm-baseline`` (penalised loss,
    ``omega`` trained, no least squares).
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; choose from {list(METHODS)}")
    integral = method in ("snn-i", "dgm-baseline")
    if integral and not isinstance(points, QuadratureSet):
        raise ConfigurationError(f"method {method} needs a quadrature point set")
    if not integral and not isinstance(points, CollocationSet):
        raise ConfigurationError(f"method {method} needs a collocation point set")
    t0 = time.perf_counter()
    timing = {}

    if method == "elm":
        params, report = elm_mode(net_cfg, r_m)
    elif method in ("pinn-baseline", "dgm-baseline"):
        params0 = init_xavier(net_cfg)
        n_epochs = baseline_epochs if baseline_epochs is not None else train_cfg.n_max
        params, omega, report = train_baseline(
            params0,
            problem,
            points,
            "integral" if integral else "discrete",
            n_epochs,
            penalty=train_cfg.penalty,
            adam=train_cfg.adam,
            callback=callback,
        )
    else:
        params0 = init_xavier(net_cfg)
        cfg = TrainConfig(
            form="integral" if integral else "discrete",
            epsilon=train_cfg.epsilon,
            n_max=train_cfg.n_max,
            include_boundary_loss=train_cfg.include_boundary_loss,
            penalty=train_cfg.penalty,
            adam=train_cfg.adam,
        )
        params, report = train(params0, problem, points, cfg, callback=callback)
    timing["train_s"] = time.perf_counter() - t0

    system = None
    if method not in ("pinn-baseline", "dgm-baseline"):
        t1 = time.perf_counter()
        system = assemble_snni(params, problem, points) if integral else assemble_snnd(params, problem, points)
        timing["assemble_s"] = time.perf_counter() - t1
        t1 = time.perf_counter()
        omega = solve_omega(system)
        timing["solve_s"] = time.perf_counter() - t1

    rep = SolveReport(
        method=method,
        problem=problem.name,
        omega=omega,
        epochs_used=report.epochs_used,
        stop_reason=report.stop_reason,
        initial_loss=report.initial_loss,
        final_loss=report.final_loss,
        final_loss_ratio=report.final_ratio if report.epochs_used else float("nan"),
        system_shape=system.shape if system is not None else None,
        residual_norm=system.residual_norm(omega) if system is not None else None,
        residual_norm_ones=system.residual_norm(np.ones(params.M)) if system is not None else None,
        train_report=report,
        params=params,
    )
    if problem.exact is not None:
        t1 = time.perf_counter()
        err = evaluate_errors(params, omega, problem)
        timing["evaluate_s"] = time.perf_counter() - t1
        rep.rel_l2_discrete = err.rel_l2_discrete
        rep.rel_l2_integral = err.rel_l2_integral
        rep.rel_linf = err.rel_linf
        rep.n_eval_points = err.n_eval_points
        rep.error_form = "integral" if integral else "discrete"
        rep.rel_l2 = err.rel_l2_integral if integral else err.rel_l2_discrete
    timing["total_s"] = time.perf_counter() - t0
    rep.timing = timing
    log.info("%s/%s: epochs=%d rel_l2=%s", problem.name, method, rep.epochs_used, rep.rel_l2)
    return rep
