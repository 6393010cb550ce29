"""Subspace neural-network solvers for linear PDEs.

A tanh MLP is trained so that its last hidden layer spans a good function
space for the problem; the output coefficients are then fitted by least
squares, either pointwise on collocation points (discrete form) or through
quadrature Gram systems (integral form).
"""

from .errors import (
    AssemblyError,
    ConfigurationError,
    ConstructionError,
    NumericError,
    SNNError,
    TrainingError,
    UndefinedNormError,
)
from .network import MlpConfig, Params, init_elm, init_xavier
from .problems import PdeProblem, builtin
from .sampling import collocation_set, quadrature_set
from .solver import SolveReport, assemble_snnd, assemble_snni, snn_solve, solve_omega
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "ConfigurationError",
    "ConstructionError",
    "MlpConfig",
    "NumericError",
    "Params",
    "PdeProblem",
    "SNNError",
    "SolveReport",
    "TrainConfig",
    "TrainingError",
    "UndefinedNormError",
    "assemble_snnd",
    "assemble_snni",
    "builtin",
    "collocation_set",
    "init_elm",
    "init_xavier",
    "quadrature_set",
    "snn_solve",
    "solve_omega",
    "train",
]
