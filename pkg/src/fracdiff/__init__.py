"""Time-fractional diffusion: Mittag-Leffler evaluation, fractional operators,
Robin-closed elliptic operators, two independent solvers and discrete
positivity/comparison certificates."""

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    EllipticityError,
    FracDiffError,
    MLOverflowError,
    NonContractionError,
    OrderingError,
    PreconditionError,
    SingularSystemError,
)
from .fractional_calculus import TimeGrid, TimeSignal, caputo_l1, rl_integral
from .mittag_leffler import MLParams, mittag_leffler, ml
from .solvers import Field, ProblemSpec, solve
from .spatial_operator import CoefficientSet, SpaceGrid, assemble

__version__ = "0.1.0"

__all__ = [
    "CoefficientSet",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "EllipticityError",
    "Field",
    "FracDiffError",
    "MLOverflowError",
    "MLParams",
    "NonContractionError",
    "OrderingError",
    "PreconditionError",
    "ProblemSpec",
    "SingularSystemError",
    "SpaceGrid",
    "TimeGrid",
    "TimeSignal",
    "assemble",
    "caputo_l1",
    "mittag_leffler",
    "ml",
    "rl_integral",
    "solve",
]
