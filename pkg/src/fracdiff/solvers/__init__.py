"""Solvers for the time-fractional problem: spectral mild solution, L1 stepping, Picard chain."""

from ..errors import DomainError
from .l1 import l1_march, solve_l1
from .picard import picard_sequence
from .problem import Field, ProblemSpec
from .spectral import (
    ModeResponse,
    TruncationWarning,
    convolution_weights,
    mode_response,
    propagate_S,
    solve_mild,
)

SOLVERS = ("spectral", "l1")


def solve(p: ProblemSpec, solver: str = "spectral", **settings) -> Field:
    """Dispatch to :func:`solve_mild` (``"spectral"``) or :func:`solve_l1` (``"l1"``).

    ``settings`` (``m_modes``, ``tol``, ``max_sweeps``) apply to the spectral solver only.
    """
    if solver == "spectral":
        return solve_mild(p, **settings)
    if solver == "l1":
        return solve_l1(p)
    raise DomainError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


__all__ = [
    "Field",
    "ModeResponse",
    "ProblemSpec",
    "SOLVERS",
    "TruncationWarning",
    "convolution_weights",
    "l1_march",
    "mode_response",
    "picard_sequence",
    "propagate_S",
    "solve",
    "solve_l1",
    "solve_mild",
]
