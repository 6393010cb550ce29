"""Tanh MLP whose last layer spans the solution subspace.

The network maps ``x`` (``d`` inputs) through ``K`` tanh hidden layers and a
tanh subspace layer of width ``M``; its outputs ``phi_1 .. phi_M`` are the
basis functions and the approximate solution is ``u(x) = phi(x) . omega``
(no output bias).

Random streams: layer ``k`` (1-based) draws from
``numpy.random.Generator(PCG64(seed ^ k))``. Xavier draws only the weight
matrix (row-major); ELM draws the weight matrix and then the bias vector
from the same stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

PARAMS_FORMAT = "snnpde.params/1"
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class MlpConfig:
    d: int
    hidden_widths: tuple[int, ...] = (100, 100, 100, 100)
    M: int = 300
    activation: str = "tanh"
    seed: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.d < 1:
            raise ConfigurationError(f"input dimension must be >= 1, got {self.d}")
        if self.M < 1:
            raise ConfigurationError(f"subspace dimension M must be >= 1, got {self.M}")
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigurationError(f"hidden widths must be >= 1, got {list(self.hidden_widths)}")
        if self.activation != "tanh":
            raise ConfigurationError(f"only tanh activation is supported, got {self.activation!r}")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.d, *self.hidden_widths, self.M)

    def layer_shapes(self) -> list[tuple[int, int]]:
        w = self.widths
        return [(w[k + 1], w[k]) for k in range(len(w) - 1)]


@dataclass
class Params:
    """All weights and biases, stored in one flat float64 buffer.

    ``weights[k]`` / ``biases[k]`` are views into ``flat``, so optimizers can
    update the flat vector in place. Gradients use the same class.
    """

    shapes: tuple[tuple[int, int], ...]
    flat: np.ndarray
    weights: list[np.ndarray] = field(init=False, repr=False)
    biases: list[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.shapes = tuple((int(r), int(c)) for r, c in self.shapes)
        self.flat = np.ascontiguousarray(self.flat, dtype=np.float64)
        if self.flat.shape != (self.size_for(self.shapes),):
            raise ConfigurationError(
                f"flat parameter buffer has {self.flat.size} entries, shapes need {self.size_for(self.shapes)}"
            )
        for (r, c), (r2, _) in zip(self.shapes[1:], self.shapes[:-1]):
            if c != r2:
                raise ConfigurationError(f"inconsistent layer shapes {self.shapes}")
        self.weights, self.biases = [], []
        off = 0
        for r, c in self.shapes:
            self.weights.append(self.flat[off : off + r * c].reshape(r, c))
            off += r * c
            self.biases.append(self.flat[off : off + r])
            off += r

    @staticmethod
    def size_for(shapes: Sequence[tuple[int, int]]) -> int:
        return int(sum(r * c + r for r, c in shapes))

    @classmethod
    def zeros(cls, shapes: Sequence[tuple[int, int]]) -> "Params":
        return cls(tuple(shapes), np.zeros(cls.size_for(shapes)))

    @property
    def d(self) -> int:
        return self.shapes[0][1]

    @property
    def M(self) -> int:
        return self.shapes[-1][0]

    @property
    def n_layers(self) -> int:
        return len(self.shapes)

    def copy(self) -> "Params":
        return Params(self.shapes, self.flat.copy())

    def zeros_like(self) -> "Params":
        return Params(self.shapes, np.zeros_like(self.flat))

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": PARAMS_FORMAT,
            "layers": [
                {"shape": [r, c], "weight": w.ravel().tolist(), "bias": b.tolist()}
                for (r, c), w, b in zip(self.shapes, self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Params":
        if doc.get("format") != PARAMS_FORMAT:
            raise ConfigurationError(f"unknown parameter document format {doc.get('format')!r}")
        shapes, chunks = [], []
        for i, layer in enumerate(doc["layers"]):
            r, c = (int(v) for v in layer["shape"])
            w = np.asarray(layer["weight"], dtype=np.float64)
            b = np.asarray(layer["bias"], dtype=np.float64)
            if w.size != r * c or b.size != r:
                raise ConfigurationError(f"layer {i}: entries do not match shape {(r, c)}")
            shapes.append((r, c))
            chunks += [w, b]
        return cls(tuple(shapes), np.concatenate(chunks))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "Params":
        return cls.from_dict(json.loads(Path(path).read_text()))


def layer_rng(seed: int, layer: int) -> np.random.Generator:
    """Random stream of 1-based layer ``layer``."""
    return np.random.Generator(np.random.PCG64((int(seed) & _SEED_MASK) ^ int(layer)))


def init_xavier(cfg: MlpConfig) -> Params:
    """Glorot-uniform weights (gain 1), zero biases."""
    params = Params.zeros(cfg.layer_shapes())
    for k, (fan_out, fan_in) in enumerate(cfg.layer_shapes(), start=1):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.weights[k - 1][...] = layer_rng(cfg.seed, k).uniform(-limit, limit, size=(fan_out, fan_in))
    return params


def init_elm(cfg: MlpConfig, r_m: float = 1.0) -> Params:
    """Every weight and bias uniform on ``[-r_m, r_m]``."""
    if not r_m > 0:
        raise ConfigurationError(f"R_m must be positive, got {r_m}")
    params = Params.zeros(cfg.layer_shapes())
    for k, (fan_out, fan_in) in enumerate(cfg.layer_shapes(), start=1):
        rng = layer_rng(cfg.seed, k)
        params.weights[k - 1][...] = rng.uniform(-r_m, r_m, size=(fan_out, fan_in))
        params.biases[k - 1][...] = rng.uniform(-r_m, r_m, size=fan_out)
    return params


def basis_values(params: Params, points: np.ndarray) -> np.ndarray:
    """``phi_j(x_i)`` as an ``(n, M)`` matrix."""
    from .autodiff import forward

    return forward(params, points, order=0).phi


def eval_solution(params: Params, omega: np.ndarray, points: np.ndarray) -> np.ndarray:
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (params.M,):
        raise ConfigurationError(f"coefficient vector has length {omega.size}, subspace dimension is {params.M}")
    return basis_values(params, points) @ omega
