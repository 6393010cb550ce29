"""Run configuration: YAML schema, validation with line-anchored errors, presets, sweeps.

A run file looks like::

    description: Helmholtz, discrete form
    problem:
      name: helmholtz1d
      params: {lam: 10.0}
    method: snn-d            # snn-d | snn-i | elm | pinn-baseline | dgm-baseline
    network: {depth: 4, width: 100, M: 300, seed: 1, r_m: 1.0}
    training: {epsilon: 1.0e-3, n_max: 5000, include_boundary_loss: false, penalty: 1.0, lr: 1.0e-3}
    collocation: {grid: 1000, inclusive: true}
    quadrature: {subintervals: 30, points: 10}
    output: {dir: results, loss_history: false, error_field: true}

Coordinates are ordered ``(x)``, ``(x, y)`` or ``(x, t)`` with time last.
For the baselines ``training.n_max`` is the fixed epoch count.
"""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigurationError
from .problems import BUILTINS, PdeProblem, builtin

METHODS = ("snn-d", "snn-i", "elm", "pinn-baseline", "dgm-baseline")
INTEGRAL_METHODS = ("snn-i", "dgm-baseline")
SCHEMA_VERSION = 1


class ConfigFileError(ConfigurationError):
    """A configuration error tied to a field and, when known, a source line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, source: str | None = None):
        self.field = field
        self.line = line
        self.source = source
        where = source or "<config>"
        if line is not None:
            where += f":{line}"
        prefix = f"{where}: {field}: " if field else f"{where}: "
        super().__init__(prefix + message)


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSection:
    name: str
    params: dict = field(default_factory=dict)

    def build(self) -> PdeProblem:
        return builtin(self.name, **self.params)


@dataclass(frozen=True)
class NetworkSection:
    depth: int = 4
    width: int = 100
    M: int = 300
    seed: int = 1
    r_m: float = 1.0

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return (self.width,) * self.depth


@dataclass(frozen=True)
class TrainingSection:
    epsilon: float = 1e-3
    n_max: int = 5000
    include_boundary_loss: bool = False
    penalty: float = 1.0
    lr: float = 1e-3


@dataclass(frozen=True)
class CollocationSection:
    grid: Any = 32
    inclusive: bool = False
    per_face: int | None = None
    group_per_face: dict = field(default_factory=dict)


@dataclass(frozen=True)
class QuadratureSection:
    subintervals: Any = 8
    points: Any = 4
    group_subintervals: dict = field(default_factory=dict)
    group_points: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OutputSection:
    dir: str = "results"
    name: str | None = None
    loss_history: bool = False
    error_field: bool = True


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSection
    method: str = "snn-d"
    network: NetworkSection = NetworkSection()
    training: TrainingSection = TrainingSection()
    collocation: CollocationSection | None = None
    quadrature: QuadratureSection | None = None
    output: OutputSection = OutputSection()
    description: str = ""

    @property
    def integral(self) -> bool:
        return self.method in INTEGRAL_METHODS

    def to_dict(self) -> dict:
        out = {"description": self.description, "problem": asdict(self.problem), "method": self.method}
        out["network"] = asdict(self.network)
        out["training"] = asdict(self.training)
        if self.collocation is not None:
            out["collocation"] = _plain(asdict(self.collocation))
        if self.quadrature is not None:
            out["quadrature"] = _plain(asdict(self.quadrature))
        out["output"] = asdict(self.output)
        return out

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, network=replace(self.network, seed=int(seed)))

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Deep-merge a nested mapping of overrides and re-validate."""
        return parse_dict(deep_merge(self.to_dict(), overrides), source="<overrides>")


def _plain(d: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_path(tree: dict, dotted: str, value) -> dict:
    """Assign ``value`` at a dotted path; mapping values are merged into mappings."""
    out = copy.deepcopy(tree)
    node = out
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"cannot descend into non-mapping at {dotted!r}")
    last = keys[-1]
    if isinstance(value, dict) and isinstance(node.get(last), dict):
        node[last] = deep_merge(node[last], value)
    else:
        node[last] = copy.deepcopy(value)
    return out


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _line_marks(text: str) -> dict[str, int]:
    """Dotted key path -> 1-based line of the key."""
    marks: dict[str, int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = f"{path}.{k.value}" if path else str(k.value)
                marks[p] = k.start_mark.line + 1
                walk(v, p)

    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return marks
    if root is not None:
        walk(root, "")
    return marks


class _Checker:
    def __init__(self, source: str, marks: dict[str, int]):
        self.source = source
        self.marks = marks

    def fail(self, path: str, msg: str):
        line = self.marks.get(path)
        if line is None and "." in path:
            line = self.marks.get(path.rsplit(".", 1)[0])
        raise ConfigFileError(msg, field=path, line=line, source=self.source)

    def section(self, data: dict, name: str, allowed: set[str], required: bool = False) -> dict | None:
        if name not in data or data[name] is None:
            if required:
                self.fail(name, "section is required")
            return None
        sec = data[name]
        if not isinstance(sec, dict):
            self.fail(name, f"expected a mapping, got {type(sec).__name__}")
        for key in sec:
            if key not in allowed:
                self.fail(f"{name}.{key}", f"unknown key; allowed: {sorted(allowed)}")
        return sec

    def integer(self, path: str, value, lo: int | None = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            else:
                self.fail(path, f"expected an integer, got {value!r}")
        if lo is not None and value < lo:
            self.fail(path, f"must be >= {lo}, got {value}")
        return int(value)

    def number(self, path: str, value) -> float:
        if isinstance(value, bool):
            self.fail(path, f"expected a number, got {value!r}")
        if isinstance(value, str):
            # YAML 1.1 reads "1e-3" (no dot) as a string
            try:
                value = float(value)
            except ValueError:
                self.fail(path, f"expected a number, got {value!r}")
        if not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        return float(value)

    def boolean(self, path: str, value) -> bool:
        if not isinstance(value, bool):
            self.fail(path, f"expected true/false, got {value!r}")
        return value

    def counts(self, path: str, value, lo: int = 1):
        if isinstance(value, (list, tuple)):
            if not value:
                self.fail(path, "expected a non-empty list")
            return tuple(self.integer(f"{path}", v, lo) for v in value)
        return self.integer(path, value, lo)

    def int_map(self, path: str, value, lo: int = 1) -> dict:
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping of group name to count, got {value!r}")
        return {str(k): self.integer(f"{path}.{k}", v, lo) for k, v in value.items()}


_TOP = {"description", "problem", "method", "network", "training", "collocation", "quadrature", "output", "version"}


def parse_dict(data: dict, source: str = "<config>", marks: dict[str, int] | None = None) -> RunConfig:
    ck = _Checker(source, marks or {})
    if not isinstance(data, dict):
        raise ConfigFileError("top level must be a mapping", source=source)
    for key in data:
        if key not in _TOP:
            ck.fail(str(key), f"unknown top-level key; allowed: {sorted(_TOP)}")
    if "version" in data and data["version"] != SCHEMA_VERSION:
        ck.fail("version", f"unsupported schema version {data['version']!r}")

    p = ck.section(data, "problem", {"name", "params"}, required=True)
    name = p.get("name")
    if not isinstance(name, str):
        ck.fail("problem.name", "problem name is required")
    if name not in BUILTINS:
        ck.fail("problem.name", f"unknown problem {name!r}; choose from {sorted(BUILTINS)}")
    params = p.get("params") or {}
    if not isinstance(params, dict):
        ck.fail("problem.params", "expected a mapping")
    params = {str(k): ck.number(f"problem.params.{k}", v) for k, v in params.items()}
    problem = ProblemSection(name, params)
    try:
        problem.build()
    except ConfigurationError as exc:
        ck.fail("problem.params", str(exc))

    method = data.get("method", "snn-d")
    if method not in METHODS:
        ck.fail("method", f"unknown method {method!r}; choose from {list(METHODS)}")

    n = ck.section(data, "network", {"depth", "width", "M", "seed", "r_m"}) or {}
    d = NetworkSection()
    network = NetworkSection(
        depth=ck.integer("network.depth", n.get("depth", d.depth), 0),
        width=ck.integer("network.width", n.get("width", d.width), 1),
        M=ck.integer("network.M", n.get("M", d.M), 1),
        seed=ck.integer("network.seed", n.get("seed", d.seed), 0),
        r_m=ck.number("network.r_m", n.get("r_m", d.r_m)),
    )
    if network.r_m <= 0:
        ck.fail("network.r_m", f"must be positive, got {network.r_m}")
    if method == "elm" and network.depth != 0:
        ck.fail("network.depth", "method elm needs depth 0 (no hidden layers)")

    t = ck.section(data, "training", {"epsilon", "n_max", "include_boundary_loss", "penalty", "lr"}) or {}
    d = TrainingSection()
    training = TrainingSection(
        epsilon=ck.number("training.epsilon", t.get("epsilon", d.epsilon)),
        n_max=ck.integer("training.n_max", t.get("n_max", d.n_max), 1),
        include_boundary_loss=ck.boolean("training.include_boundary_loss", t.get("include_boundary_loss", d.include_boundary_loss)),
        penalty=ck.number("training.penalty", t.get("penalty", d.penalty)),
        lr=ck.number("training.lr", t.get("lr", d.lr)),
    )
    if not 0 < training.epsilon <= 1:
        ck.fail("training.epsilon", f"must lie in (0, 1], got {training.epsilon}")
    if training.penalty < 0:
        ck.fail("training.penalty", f"must be >= 0, got {training.penalty}")
    if training.lr <= 0:
        ck.fail("training.lr", f"must be positive, got {training.lr}")

    groups = {c.name for c in problem.build().conditions}

    c = ck.section(data, "collocation", {"grid", "inclusive", "per_face", "group_per_face"})
    collocation = None
    if c is not None:
        if "grid" not in c:
            ck.fail("collocation.grid", "grid count is required")
        per_face = c.get("per_face")
        collocation = CollocationSection(
            grid=ck.counts("collocation.grid", c["grid"]),
            inclusive=ck.boolean("collocation.inclusive", c.get("inclusive", False)),
            per_face=None if per_face is None else ck.integer("collocation.per_face", per_face, 1),
            group_per_face=ck.int_map("collocation.group_per_face", c.get("group_per_face")),
        )
        grid = collocation.grid if isinstance(collocation.grid, tuple) else (collocation.grid,)
        if collocation.inclusive and min(grid) < 2:
            ck.fail("collocation.grid", "an inclusive grid needs at least 2 points per axis")
        for g in collocation.group_per_face:
            if g not in groups:
                ck.fail(f"collocation.group_per_face.{g}", f"unknown condition group; problem has {sorted(groups)}")

    q = ck.section(data, "quadrature", {"subintervals", "points", "group_subintervals", "group_points"})
    quadrature = None
    if q is not None:
        for key in ("subintervals", "points"):
            if key not in q:
                ck.fail(f"quadrature.{key}", "value is required")
        quadrature = QuadratureSection(
            subintervals=ck.counts("quadrature.subintervals", q["subintervals"]),
            points=ck.counts("quadrature.points", q["points"]),
            group_subintervals=ck.int_map("quadrature.group_subintervals", q.get("group_subintervals")),
            group_points=ck.int_map("quadrature.group_points", q.get("group_points")),
        )
        for key in ("group_subintervals", "group_points"):
            for g in getattr(quadrature, key):
                if g not in groups:
                    ck.fail(f"quadrature.{key}.{g}", f"unknown condition group; problem has {sorted(groups)}")
        pts = quadrature.points if isinstance(quadrature.points, tuple) else (quadrature.points,)
        if any(v > 64 for v in pts + tuple(quadrature.group_points.values())):
            ck.fail("quadrature.points", "at most 64 Gauss points per subinterval")

    if method in INTEGRAL_METHODS and quadrature is None:
        ck.fail("quadrature", f"method {method} requires a quadrature section")
    if method not in INTEGRAL_METHODS and collocation is None:
        ck.fail("collocation", f"method {method} requires a collocation section")

    o = ck.section(data, "output", {"dir", "name", "loss_history", "error_field"}) or {}
    output = OutputSection(
        dir=str(o.get("dir", "results")),
        name=None if o.get("name") is None else str(o["name"]),
        loss_history=ck.boolean("output.loss_history", o.get("loss_history", False)),
        error_field=ck.boolean("output.error_field", o.get("error_field", True)),
    )
    desc = data.get("description", "") or ""
    if not isinstance(desc, str):
        ck.fail("description", "expected a string")
    return RunConfig(problem, method, network, training, collocation, quadrature, output, desc)


def _load_yaml(text: str, source: str):
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigFileError(f"YAML syntax error: {exc.problem}", line=line, source=source) from None
    except yaml.YAMLError as exc:
        raise ConfigFileError(f"YAML error: {exc}", source=source) from None


def parse_text(text: str, source: str = "<string>") -> RunConfig:
    data = _load_yaml(text, source)
    if data is None:
        raise ConfigFileError("empty configuration", source=source)
    return parse_dict(data, source, _line_marks(text))


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_text(path.read_text(), str(path))


# ---------------------------------------------------------------------------
# presets and sweep files shipped with the package
# ---------------------------------------------------------------------------


def _data_dir(kind: str):
    return resources.files("snnpde") / kind


def _names(kind: str) -> list[str]:
    return sorted(p.name[:-5] for p in _data_dir(kind).iterdir() if p.name.endswith(".yaml"))


def preset_names() -> list[str]:
    return _names("presets")


def presets() -> list[tuple[str, str]]:
    """``(name, description)`` for every built-in preset."""
    return [(name, preset(name).description) for name in preset_names()]


def preset_text(name: str) -> str:
    f = _data_dir("presets") / f"{name}.yaml"
    if not f.is_file():
        raise ConfigurationError(f"unknown preset {name!r}; see `snnpde presets`")
    return f.read_text()


def preset(name: str) -> RunConfig:
    return parse_text(preset_text(name), f"preset:{name}")


def resolve_config(ref: str) -> tuple[RunConfig, str]:
    """A config from a file path or a preset name, plus a short run name."""
    path = Path(ref)
    if path.is_file():
        return load_config(path), path.stem
    if ref in preset_names():
        return preset(ref), ref
    raise ConfigurationError(f"{ref!r} is neither a config file nor a preset name")


def sweep_names() -> list[str]:
    return _names("sweeps")


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian product of axes applied to a base config.

    ``axes`` maps a dotted config path to a list of values; a mapping value is
    merged into the mapping at that path. The special axis ``preset`` swaps
    the base config per cell. The first axis varies slowest.
    """

    name: str
    description: str
    base: dict
    axes: dict[str, list]

    def cells(self) -> list[tuple[dict, RunConfig]]:
        keys = list(self.axes)
        out = []
        for combo in itertools.product(*(self.axes[k] for k in keys)):
            assign = dict(zip(keys, combo))
            tree = self.base
            if "preset" in assign:
                tree = deep_merge(preset(assign["preset"]).to_dict(), self.base)
            for k, v in assign.items():
                if k != "preset":
                    tree = set_path(tree, k, v)
            out.append((assign, tree))
        return out

    def configs(self) -> list[tuple[dict, RunConfig]]:
        return [(a, parse_dict(t, source=f"sweep:{self.name}")) for a, t in self.cells()]


def parse_sweep(text: str, source: str = "<sweep>", name: str = "sweep") -> SweepSpec:
    data = _load_yaml(text, source)
    marks = _line_marks(text)
    ck = _Checker(source, marks)
    if not isinstance(data, dict):
        raise ConfigFileError("sweep file must be a mapping", source=source)
    for key in data:
        if key not in ("description", "base", "overrides", "axes"):
            ck.fail(str(key), "unknown key; allowed: ['axes', 'base', 'description', 'overrides']")
    axes = data.get("axes")
    if not isinstance(axes, dict) or not axes:
        ck.fail("axes", "a non-empty mapping of axes is required")
    for k, v in axes.items():
        if not isinstance(v, list) or not v:
            ck.fail(f"axes.{k}", "axis values must be a non-empty list")
    base = data.get("base")
    if base is None and "preset" not in axes:
        ck.fail("base", "a base config (preset name or mapping) is required unless a preset axis is given")
    if isinstance(base, str):
        try:
            base = preset(base).to_dict()
        except ConfigurationError as exc:
            ck.fail("base", str(exc))
    elif base is None:
        base = {}
    elif not isinstance(base, dict):
        ck.fail("base", "expected a preset name or a mapping")
    base = deep_merge(base, data.get("overrides") or {})
    if "preset" in axes:
        for v in axes["preset"]:
            if v not in preset_names():
                ck.fail("axes.preset", f"unknown preset {v!r}")
    spec = SweepSpec(name, str(data.get("description", "")), base, dict(axes))
    try:
        spec.configs()
    except ConfigFileError as exc:
        raise ConfigFileError(f"invalid sweep cell: {exc}", source=source) from None
    return spec


def load_sweep(ref: str) -> SweepSpec:
    path = Path(ref)
    if path.is_file():
        return parse_sweep(path.read_text(), str(path), path.stem)
    f = _data_dir("sweeps") / f"{ref}.yaml"
    if f.is_file():
        return parse_sweep(f.read_text(), f"sweep:{ref}", ref)
    raise ConfigurationError(f"{ref!r} is neither a sweep file nor a shipped sweep name")


def cell_label(assign: dict) -> dict[str, str]:
    """Axis values rendered for CSV columns (mappings as compact JSON)."""
    return {k: json.dumps(v, separators=(",", ":")) if isinstance(v, (dict, list)) else str(v) for k, v in assign.items()}
