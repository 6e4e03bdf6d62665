"""The monotone iteration behind the positivity argument.

Starting from ``u_0 = 0`` and ``u_1 = a``, each iterate solves

    d_t^alpha (u_{n+1} - a) + A1 u_{n+1} = (b0 + c) u_n + F

with the L1 scheme. When ``b0 + c >= 0`` and the data are non-negative every
iterate is non-negative, and the iterates converge to the solution.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, PreconditionError
from ..spatial_operator import assemble_series
from .l1 import l1_march
from .problem import Field, ProblemSpec

__all__ = ["picard_sequence"]


def picard_sequence(p: ProblemSpec, n_terms: int) -> list[Field]:
    """Return ``[u_0, u_1, ..., u_{n_terms-1}]``.

    Raises:
        PreconditionError: ``b0 + c`` is negative somewhere, so the chain is not monotone.
    """
    if n_terms < 1:
        raise DomainError("n_terms must be at least 1")
    pts = p.grid.points
    ts = p.tgrid.nodes
    shift = np.stack([p.coeffs.zeroth(pts, t) + p.coeffs.reaction(pts, t) for t in ts])
    if np.any(shift < 0):
        raise PreconditionError("b0 + c must be non-negative for the monotone iteration")
    ops = dict(zip(ts.tolist(), assemble_series(p.coeffs, p.grid, "A1", ts)))

    def A1(t: float):
        return ops[float(t)]

    fp = p.fingerprint()
    seq = [Field(np.zeros((ts.size, p.grid.size)), p.grid, p.tgrid, "picard", fingerprint=fp)]
    if n_terms > 1:
        seq.append(Field(np.broadcast_to(p.a, (ts.size, p.grid.size)), p.grid, p.tgrid, "picard", fingerprint=fp))
    while len(seq) < n_terms:
        rhs = shift * seq[-1].values + p.F
        u = l1_march(p.alpha, p.tgrid, p.a, rhs, A1)
        seq.append(Field(u, p.grid, p.tgrid, "picard", fingerprint=fp))
    return seq
