"""Problem description and space-time solution container shared by the solvers."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DomainError
from ..fractional_calculus import TimeGrid
from ..spatial_operator import CoefficientSet, SpaceGrid

__all__ = ["Field", "ProblemSpec"]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One initial-boundary value problem ``d_t^alpha (u - a) + A u = F``.

    Attributes:
        alpha: fractional order in (0, 1).
        grid: spatial grid.
        tgrid: time grid.
        coeffs: operator coefficients (Robin data included).
        a: initial value at the spatial nodes, shape ``(n,)``.
        F: source at every time node, shape ``(N + 1, n)``.
    """

    alpha: float
    grid: SpaceGrid
    tgrid: TimeGrid
    coeffs: CoefficientSet
    a: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        n, N = self.grid.size, self.tgrid.N
        a = np.array(np.broadcast_to(np.asarray(self.a, dtype=float), (n,)))
        F = np.array(np.broadcast_to(np.asarray(self.F, dtype=float), (N + 1, n)))
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(F))):
            raise DomainError("initial value and source must be finite")
        a.flags.writeable = False
        F.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "F", F)

    def with_(self, **changes) -> ProblemSpec:
        """Copy with some fields replaced."""
        return replace(self, **changes)

    def coefficient_samples(self) -> dict[str, np.ndarray]:
        """Every coefficient sampled on the grid (time-dependent ones at all time nodes)."""
        pts = self.grid.points
        ts = self.tgrid.nodes
        bnd = self.grid.boundary
        return {
            "a": self.coeffs.diffusion(pts, self.grid.dim),
            "b": np.stack([self.coeffs.drift(pts, t, self.grid.dim) for t in ts]),
            "c": np.stack([self.coeffs.reaction(pts, t) for t in ts]),
            "b0": np.stack([self.coeffs.zeroth(pts, t) for t in ts]),
            "sigma": self.coeffs.robin(pts[bnd]),
            "c0": np.array([self.coeffs.c0]),
        }

    def fingerprint(self) -> str:
        """SHA-256 over the order, grids, data and sampled coefficients."""
        h = hashlib.sha256()
        h.update(np.array([self.alpha], dtype="<f8").tobytes())
        h.update(np.array(self.grid.shape, dtype="<i8").tobytes())
        h.update(np.array(self.grid.lengths, dtype="<f8").tobytes())
        h.update(np.asarray(self.tgrid.nodes, dtype="<f8").tobytes())
        h.update(np.asarray(self.a, dtype="<f8").tobytes())
        h.update(np.asarray(self.F, dtype="<f8").tobytes())
        for key, val in sorted(self.coefficient_samples().items()):
            h.update(key.encode())
            h.update(np.ascontiguousarray(val, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class Field:
    """Grid function ``u(x_i, t_k)`` stored as ``values[k, i]``.

    Attributes:
        values: array of shape ``(N + 1, n)``.
        grid: spatial grid.
        tgrid: time grid.
        producer: ``"spectral"``, ``"l1"`` or ``"picard"``.
        iteration_report: sup-norm deltas of successive Picard sweeps (spectral only).
        warnings: diagnostics raised while producing the field.
        fingerprint: fingerprint of the producing :class:`ProblemSpec` (empty if unknown).
    """

    values: np.ndarray = field(repr=False)
    grid: SpaceGrid
    tgrid: TimeGrid
    producer: str
    iteration_report: tuple[float, ...] = ()
    warnings: tuple[str, ...] = ()
    fingerprint: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.tgrid.N + 1, self.grid.size):
            raise DomainError(f"field shape {values.shape} does not match the grids")
        if self.producer not in ("spectral", "l1", "picard"):
            raise DomainError(f"unknown producer {self.producer!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "iteration_report", tuple(float(d) for d in self.iteration_report))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    def compatible(self, other: Field) -> bool:
        return self.grid.same_as(other.grid) and self.tgrid.same_as(other.tgrid)
