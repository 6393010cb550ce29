"""Collocation point sets and quadrature point sets for the built-in problems.

Face sampling follows a counter-clockwise walk of the box so that every
corner belongs to exactly one face: ``y = low`` runs in +x, ``x = high`` in
+y, ``y = high`` in -x and ``x = low`` in -y, each face dropping its end
point. Periodic pairs use the same ascending coordinates on both faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .linalg import QuadratureRule1D, composite_rule, tensor_rule
from .problems import Box, ConditionGroup, ConditionSpec, Face, PdeProblem


@dataclass
class CollocationSet:
    interior: np.ndarray
    groups: list[ConditionGroup] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.interior.shape[0]

    @property
    def N_bar(self) -> int:
        return sum(len(g) for g in self.groups)


@dataclass
class QuadratureSet:
    interior: np.ndarray
    weights: np.ndarray
    groups: list[ConditionGroup] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.interior.shape[0]

    @property
    def N_bar(self) -> int:
        return sum(len(g) for g in self.groups)


def _per_dim(value, d: int, what: str) -> tuple[int, ...]:
    vals = (value,) * d if np.isscalar(value) else tuple(value)
    if len(vals) == 1 and d > 1:
        vals = vals * d
    if len(vals) != d:
        raise ConfigurationError(f"{what} needs 1 or {d} entries, got {len(vals)}")
    return tuple(int(v) for v in vals)


def uniform_grid(domain: Box, counts, inclusive: bool) -> np.ndarray:
    """Tensor grid of equally spaced points; the first coordinate varies slowest.

    Inclusive grids contain the end points; otherwise the points are the
    interior nodes of an equally spaced grid with ``count + 2`` nodes.
    """
    counts = _per_dim(counts, domain.d, "grid counts")
    axes = []
    for n, lo, hi in zip(counts, domain.lows, domain.highs):
        if inclusive:
            if n < 2:
                raise ConfigurationError(f"inclusive grid needs at least 2 points per axis, got {n}")
            axes.append(np.linspace(lo, hi, n))
        else:
            if n < 1:
                raise ConfigurationError(f"grid needs at least 1 point per axis, got {n}")
            axes.append(np.linspace(lo, hi, n + 2)[1:-1])
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _face_fixed(domain: Box, face: Face) -> float:
    return domain.highs[face.axis] if face.side else domain.lows[face.axis]


def face_points(domain: Box, face: Face, n: int) -> np.ndarray:
    """``n`` equally spaced points on ``face`` under the corner-ownership walk."""
    if domain.d == 1:
        return np.array([[_face_fixed(domain, face)]])
    if n < 1:
        raise ConfigurationError(f"face point count must be >= 1, got {n}")
    free = 1 - face.axis
    lo, hi = domain.lows[free], domain.highs[free]
    # counter-clockwise: (axis 1, low) and (axis 0, high) ascend; the others descend
    ascending = (face.axis == 1) != (face.side == 1)
    s = np.linspace(lo, hi, n + 1)[:-1] if ascending else np.linspace(hi, lo, n + 1)[:-1]
    pts = np.empty((n, 2))
    pts[:, face.axis] = _face_fixed(domain, face)
    pts[:, free] = s
    return pts


def boundary_points(domain: Box, per_edge: int) -> list[np.ndarray]:
    """Points on every face of the box, in face order (axis 0 low/high, axis 1 low/high)."""
    return [face_points(domain, Face(a, s), per_edge) for a in range(domain.d) for s in (0, 1)]


def _periodic_pair(domain: Box, axis: int, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    free = 1 - axis
    left = np.empty((coords.size, 2))
    right = np.empty((coords.size, 2))
    left[:, axis], right[:, axis] = domain.lows[axis], domain.highs[axis]
    left[:, free] = right[:, free] = coords
    return left, right


def _free_axis(domain: Box, axis: int) -> int:
    return 0 if domain.d == 1 else 1 - axis


def collocation_set(
    problem: PdeProblem,
    grid,
    inclusive: bool = False,
    per_face: int | None = None,
    group_per_face: Mapping[str, int] | None = None,
) -> CollocationSet:
    """Interior grid plus sampled condition groups.

    ``per_face`` defaults to the grid count along the face; ``group_per_face``
    overrides it for named condition groups.
    """
    domain = problem.domain
    counts = _per_dim(grid, domain.d, "grid counts")
    interior = uniform_grid(domain, counts, inclusive)
    group_per_face = dict(group_per_face or {})
    unknown = set(group_per_face) - {c.name for c in problem.conditions}
    if unknown:
        raise ConfigurationError(f"unknown condition group(s) {sorted(unknown)} for problem {problem.name}")

    def count(spec: ConditionSpec, axis: int) -> int:
        if spec.name in group_per_face:
            return int(group_per_face[spec.name])
        if per_face is not None:
            return int(per_face)
        return counts[_free_axis(domain, axis)]

    groups = []
    for spec in problem.conditions:
        if spec.kind == "periodic":
            n = count(spec, spec.axis)
            free = 1 - spec.axis
            coords = np.linspace(domain.lows[free], domain.highs[free], n + 1)[:-1]
            left, right = _periodic_pair(domain, spec.axis, coords)
            groups.append(ConditionGroup(spec.name, "periodic", left, np.zeros(n), partner=right))
        else:
            pts = np.concatenate([face_points(domain, f, count(spec, f.axis)) for f in spec.faces])
            groups.append(ConditionGroup(spec.name, "dirichlet", pts, spec.g(pts)))
    return CollocationSet(interior=interior, groups=groups)


def _rules(domain: Box, subintervals, points) -> list[QuadratureRule1D]:
    s = _per_dim(subintervals, domain.d, "subintervals")
    q = _per_dim(points, domain.d, "points per subinterval")
    return [composite_rule(lo, hi, si, qi) for lo, hi, si, qi in zip(domain.lows, domain.highs, s, q)]


def quadrature_set(
    problem: PdeProblem,
    subintervals,
    points,
    group_subintervals: Mapping[str, int] | None = None,
    group_points: Mapping[str, int] | None = None,
) -> QuadratureSet:
    """Tensor composite Gauss-Legendre interior rule plus 1-D face rules.

    Each face uses the domain rule of its free axis unless overridden per
    group. In 1-D the face "rule" is the end point with unit weight.
    """
    domain = problem.domain
    rules = _rules(domain, subintervals, points)
    if domain.d == 1:
        interior, weights = rules[0].nodes[:, None], rules[0].weights
    else:
        r2 = tensor_rule(rules[0], rules[1])
        interior, weights = r2.points, r2.weights
    group_subintervals = dict(group_subintervals or {})
    group_points = dict(group_points or {})
    names = {c.name for c in problem.conditions}
    unknown = (set(group_subintervals) | set(group_points)) - names
    if unknown:
        raise ConfigurationError(f"unknown condition group(s) {sorted(unknown)} for problem {problem.name}")
    s_dims = _per_dim(subintervals, domain.d, "subintervals")
    q_dims = _per_dim(points, domain.d, "points per subinterval")
    groups = []
    for spec in problem.conditions:
        if domain.d == 1:
            pts = np.concatenate([face_points(domain, f, 1) for f in spec.faces])
            groups.append(ConditionGroup(spec.name, "dirichlet", pts, spec.g(pts), weights=np.ones(len(pts))))
            continue

        def face_rule(axis: int) -> QuadratureRule1D:
            free = 1 - axis
            return composite_rule(
                domain.lows[free],
                domain.highs[free],
                int(group_subintervals.get(spec.name, s_dims[free])),
                int(group_points.get(spec.name, q_dims[free])),
            )

        if spec.kind == "periodic":
            rule = face_rule(spec.axis)
            left, right = _periodic_pair(domain, spec.axis, rule.nodes)
            groups.append(
                ConditionGroup(spec.name, "periodic", left, np.zeros(len(rule)), partner=right, weights=rule.weights)
            )
        else:
            chunks, wts = [], []
            for face in spec.faces:
                rule = face_rule(face.axis)
                pts = np.empty((len(rule), 2))
                pts[:, face.axis] = _face_fixed(domain, face)
                pts[:, 1 - face.axis] = rule.nodes
                chunks.append(pts)
                wts.append(rule.weights)
            pts = np.concatenate(chunks)
            groups.append(ConditionGroup(spec.name, "dirichlet", pts, spec.g(pts), weights=np.concatenate(wts)))
    return QuadratureSet(interior=interior, weights=weights, groups=groups)
