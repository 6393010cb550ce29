"""Linear PDE problem descriptions and the built-in benchmark problems.

Coordinates are ordered ``(x,)`` in 1-D and ``(x, y)`` or ``(x, t)`` in 2-D,
time always last. Space-time problems are treated as stationary problems on
the ``(x, t)`` box with the initial condition as a Dirichlet trace on the
``t = t0`` face.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .autodiff import BasisEval, Block, forward, linear_rows
from .errors import ConfigurationError

Coefficient = Union[None, float, Callable[[np.ndarray], np.ndarray]]
PointFn = Callable[[np.ndarray], np.ndarray]

PI = np.pi


@dataclass(frozen=True)
class Box:
    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lows", tuple(float(v) for v in self.lows))
        object.__setattr__(self, "highs", tuple(float(v) for v in self.highs))
        if len(self.lows) != len(self.highs) or not 1 <= len(self.lows) <= 2:
            raise ConfigurationError("domain must be a 1-D or 2-D box")
        if any(lo >= hi for lo, hi in zip(self.lows, self.highs)):
            raise ConfigurationError(f"degenerate box {self.lows} .. {self.highs}")

    @property
    def d(self) -> int:
        return len(self.lows)

    @property
    def measure(self) -> float:
        return float(np.prod([hi - lo for lo, hi in zip(self.lows, self.highs)]))

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        lo, hi = np.asarray(self.lows), np.asarray(self.highs)
        return np.all((points >= lo - tol) & (points <= hi + tol), axis=1)

    def on_boundary(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        lo, hi = np.asarray(self.lows), np.asarray(self.highs)
        near = (np.abs(points - lo) <= tol) | (np.abs(points - hi) <= tol)
        return self.contains(points, tol) & np.any(near, axis=1)


@dataclass(frozen=True)
class Face:
    """The face ``x_axis = low`` (side 0) or ``x_axis = high`` (side 1) of a box."""

    axis: int
    side: int


def _eval_coef(c: Coefficient, points: np.ndarray) -> np.ndarray:
    if callable(c):
        return np.broadcast_to(np.asarray(c(points), dtype=np.float64), (points.shape[0],)).copy()
    return np.full(points.shape[0], float(c))


@dataclass(frozen=True)
class DifferentialOperator:
    """``A u = sum_p c2_p u_{x_p x_p} + sum_p c1_p u_{x_p} + c0 u``.

    Each coefficient is a constant, a callable of the points (n, d), or None.
    """

    d: int
    c0: Coefficient = None
    c1: tuple[Coefficient, ...] | None = None
    c2: tuple[Coefficient, ...] | None = None

    def __post_init__(self):
        for name in ("c1", "c2"):
            val = getattr(self, name)
            if val is not None:
                val = tuple(val)
                if len(val) != self.d:
                    raise ConfigurationError(f"{name} needs {self.d} entries, got {len(val)}")
                object.__setattr__(self, name, val)

    @property
    def order(self) -> int:
        return 2 if self.c2 is not None else 1 if self.c1 is not None else 0

    def coefficients(self, points: np.ndarray):
        """Per-point coefficient arrays ``(c0 (n,), c1 (d, n), c2 (d, n))``, None where absent."""
        c0 = None if self.c0 is None else _eval_coef(self.c0, points)
        c1 = None if self.c1 is None else np.stack([_eval_coef(c, points) for c in self.c1])
        c2 = None if self.c2 is None else np.stack([_eval_coef(c, points) for c in self.c2])
        return c0, c1, c2

    def block(self, points: np.ndarray) -> Block:
        return Block(points, *self.coefficients(points))


@dataclass(frozen=True)
class Solution:
    """Closed-form solution with its gradient and Hessian diagonal, each (d, n)."""

    value: PointFn
    grad: Callable[[np.ndarray], np.ndarray]
    hess_diag: Callable[[np.ndarray], np.ndarray]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.value(points)


@dataclass(frozen=True)
class ConditionSpec:
    """A boundary/initial condition before sampling.

    ``kind="dirichlet"``: ``u = g`` on each face in ``faces``.
    ``kind="periodic"``: ``u(low face) = u(high face)`` along ``axis``.
    """

    name: str
    kind: str
    faces: tuple[Face, ...] = ()
    axis: int | None = None
    g: PointFn | None = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "periodic"):
            raise ConfigurationError(f"unknown condition kind {self.kind!r}")
        if self.kind == "dirichlet" and (not self.faces or self.g is None):
            raise ConfigurationError(f"dirichlet condition {self.name!r} needs faces and data g")
        if self.kind == "periodic" and self.axis is None:
            raise ConfigurationError(f"periodic condition {self.name!r} needs an axis")


@dataclass
class ConditionGroup:
    """A sampled condition: rows ``B u(points_i) = target_i``.

    For periodic pairs the row is ``u(points_i) - u(partner_i) = 0``.
    ``weights`` are quadrature weights (integral form only).
    """

    name: str
    kind: str
    points: np.ndarray
    target: np.ndarray
    partner: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        n = self.points.shape[0]
        if self.target.shape != (n,):
            raise ConfigurationError(f"condition {self.name!r}: target length does not match point count")
        if self.kind == "periodic":
            if self.partner is None or np.shape(self.partner) != self.points.shape:
                raise ConfigurationError(f"periodic condition {self.name!r}: partner points must pair one-to-one")
            if np.any(self.target != 0.0):
                raise ConfigurationError(f"periodic condition {self.name!r}: targets must be zero")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != (n,):
                raise ConfigurationError(f"condition {self.name!r}: weight count does not match point count")

    def __len__(self) -> int:
        return self.points.shape[0]

    def blocks(self) -> tuple[Block, ...]:
        ones = np.ones(len(self))
        if self.kind == "periodic":
            return (Block(self.points, c0=ones), Block(self.partner, c0=-ones))
        return (Block(self.points, c0=ones),)


@dataclass(frozen=True)
class PdeProblem:
    name: str
    domain: Box
    operator: DifferentialOperator
    f: PointFn
    conditions: tuple[ConditionSpec, ...]
    exact: Solution | None = None
    coords: tuple[str, ...] = ("x",)
    params: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.domain.d


def apply_operator(op: DifferentialOperator, be: BasisEval, points: np.ndarray) -> np.ndarray:
    """Matrix ``(A phi_j)(x_i)`` of shape (n, M)."""
    if be.order < op.order:
        raise ConfigurationError(f"operator needs derivative order {op.order}, basis was evaluated to order {be.order}")
    return linear_rows(be, *op.coefficients(np.asarray(points, dtype=np.float64)))


def apply_condition(group: ConditionGroup, params) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``(B phi_j)(xbar_i)`` and the matching targets."""
    rows = forward(params, group.points, order=0).phi
    if group.kind == "periodic":
        rows = rows - forward(params, group.partner, order=0).phi
    return rows, group.target.copy()


def apply_operator_exact(op: DifferentialOperator, sol: Solution, points: np.ndarray) -> np.ndarray:
    """``A u*`` evaluated from the closed-form derivatives of ``sol``."""
    c0, c1, c2 = op.coefficients(points)
    out = np.zeros(points.shape[0])
    if c0 is not None:
        out += c0 * sol.value(points)
    if c1 is not None:
        out += np.sum(c1 * sol.grad(points), axis=0)
    if c2 is not None:
        out += np.sum(c2 * sol.hess_diag(points), axis=0)
    return out


# ---------------------------------------------------------------------------
# built-in problems
# ---------------------------------------------------------------------------


def _faces_of(d: int, axes: Sequence[int]) -> tuple[Face, ...]:
    return tuple(Face(a, s) for a in axes for s in (0, 1))


def helmholtz1d(lam: float = 10.0, a: float = 0.0, b: float = 2.0) -> PdeProblem:
    """``u'' - lam u = f`` on ``(a, b)`` with Dirichlet ends.

    Exact solution ``sin(3 pi x + 3 pi/20) cos(2 pi x + pi/10) + 2``.
    """

    def phases(p):
        x = p[:, 0]
        return 3 * PI * x + 3 * PI / 20, 2 * PI * x + PI / 10

    def u(p):
        s, c = phases(p)
        return np.sin(s) * np.cos(c) + 2.0

    def du(p):
        s, c = phases(p)
        return (3 * PI * np.cos(s) * np.cos(c) - 2 * PI * np.sin(s) * np.sin(c))[None, :]

    def d2u(p):
        s, c = phases(p)
        return (-13 * PI**2 * np.sin(s) * np.cos(c) - 12 * PI**2 * np.cos(s) * np.sin(c))[None, :]

    def f(p):
        return d2u(p)[0] - lam * u(p)

    sol = Solution(u, du, d2u)
    return PdeProblem(
        name="helmholtz1d",
        domain=Box((a,), (b,)),
        operator=DifferentialOperator(d=1, c0=-lam, c2=(1.0,)),
        f=f,
        conditions=(ConditionSpec("boundary", "dirichlet", faces=_faces_of(1, [0]), g=u),),
        exact=sol,
        coords=("x",),
        params={"lam": lam, "a": a, "b": b},
    )


def _sinsin():
    def u(p):
        return np.sin(PI * p[:, 0]) * np.sin(PI * p[:, 1])

    def du(p):
        x, y = p[:, 0], p[:, 1]
        return np.stack([PI * np.cos(PI * x) * np.sin(PI * y), PI * np.sin(PI * x) * np.cos(PI * y)])

    def d2u(p):
        return np.stack([-(PI**2) * u(p), -(PI**2) * u(p)])

    return Solution(u, du, d2u)


def anisotropic2d(k1: float = 1.0, k2: float = 1.0) -> PdeProblem:
    """``-div(diag(k1, k2) grad u) = f`` on the unit square, ``u = sin(pi x) sin(pi y)``."""
    if not (k1 > 0 and k2 > 0):
        raise ConfigurationError(f"diffusion coefficients must be positive, got k1={k1}, k2={k2}")
    sol = _sinsin()

    def f(p):
        return (k1 + k2) * PI**2 * sol.value(p)

    return PdeProblem(
        name="anisotropic2d",
        domain=Box((0.0, 0.0), (1.0, 1.0)),
        operator=DifferentialOperator(d=2, c2=(-k1, -k2)),
        f=f,
        conditions=(ConditionSpec("boundary", "dirichlet", faces=_faces_of(2, [0, 1]), g=sol.value),),
        exact=sol,
        coords=("x", "y"),
        params={"k1": k1, "k2": k2},
    )


def poisson2d() -> PdeProblem:
    """``-lap u = 2 pi^2 sin(pi x) sin(pi y)`` on the unit square."""
    base = anisotropic2d(1.0, 1.0)
    return PdeProblem(
        name="poisson2d",
        domain=base.domain,
        operator=base.operator,
        f=base.f,
        conditions=base.conditions,
        exact=base.exact,
        coords=base.coords,
        params={},
    )


def advection(c: float = -2.0, a: float = -1.0, b: float = 1.0, T: float = 1.0) -> PdeProblem:
    """``u_t - c u_x = 0`` on ``(a, b) x (0, T)``, periodic in ``x``.

    Exact solution ``sin(pi (x + c t))`` (``sin(pi (x - 2t))`` for ``c = -2``).
    """

    def u(p):
        return np.sin(PI * (p[:, 0] + c * p[:, 1]))

    def du(p):
        cs = PI * np.cos(PI * (p[:, 0] + c * p[:, 1]))
        return np.stack([cs, c * cs])

    def d2u(p):
        s = -(PI**2) * u(p)
        return np.stack([s, c * c * s])

    def f(p):
        return np.zeros(p.shape[0])

    return PdeProblem(
        name="advection",
        domain=Box((a, 0.0), (b, T)),
        operator=DifferentialOperator(d=2, c1=(-c, 1.0)),
        f=f,
        conditions=(
            ConditionSpec("periodic", "periodic", axis=0),
            ConditionSpec("initial", "dirichlet", faces=(Face(1, 0),), g=u),
        ),
        exact=Solution(u, du, d2u),
        coords=("x", "t"),
        params={"c": c, "a": a, "b": b, "T": T},
    )


def parabolic1d(a: float = 0.0, b: float = 1.0, T: float = 1.0) -> PdeProblem:
    """``u_t - u_xx = f`` on ``(a, b) x (0, T)``, ``u = 2 exp(-t) sin(pi x)``."""

    def u(p):
        return 2.0 * np.exp(-p[:, 1]) * np.sin(PI * p[:, 0])

    def du(p):
        x, t = p[:, 0], p[:, 1]
        return np.stack([2.0 * PI * np.exp(-t) * np.cos(PI * x), -u(p)])

    def d2u(p):
        return np.stack([-(PI**2) * u(p), u(p)])

    def f(p):
        return (PI**2 - 1.0) * u(p)

    return PdeProblem(
        name="parabolic1d",
        domain=Box((a, 0.0), (b, T)),
        operator=DifferentialOperator(d=2, c1=(0.0, 1.0), c2=(-1.0, 0.0)),
        f=f,
        conditions=(
            ConditionSpec("boundary", "dirichlet", faces=(Face(0, 0), Face(0, 1)), g=u),
            ConditionSpec("initial", "dirichlet", faces=(Face(1, 0),), g=u),
        ),
        exact=Solution(u, du, d2u),
        coords=("x", "t"),
        params={"a": a, "b": b, "T": T},
    )


BUILTINS: dict[str, Callable[..., PdeProblem]] = {
    "helmholtz1d": helmholtz1d,
    "poisson2d": poisson2d,
    "advection": advection,
    "parabolic1d": parabolic1d,
    "anisotropic2d": anisotropic2d,
}


def builtin(name: str, **params) -> PdeProblem:
    try:
        ctor = BUILTINS[name]
    except KeyError:
        raise ConfigurationError(f"unknown problem {name!r}; choose from {sorted(BUILTINS)}") from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for problem {name!r}: {exc}") from None
