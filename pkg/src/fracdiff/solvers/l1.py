"""Implicit L1 time stepping.

This solver is an independent cross-check of the spectral solver: it uses only
the L1 weights and direct sparse or banded linear solves, and never evaluates a
Mittag-Leffler function. It marches the shifted unknown ``v = u - a``, which
vanishes at ``t = 0``:

    w_{k,k-1} v_k + A(t_k) v_k = F_k - A(t_k) a + w_{k,k-1} v_{k-1}
                                 - sum_{j < k-1} w_{k,j} (v_{j+1} - v_j).
"""

from __future__ import annotations

from typing import Callable, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import DomainError, SingularSystemError
from ..fractional_calculus import TimeGrid, l1_weights
from ..spatial_operator import DiscreteOperator, assemble_series
from .problem import Field, ProblemSpec

__all__ = ["l1_march", "solve_l1"]

MatrixLike = Union[np.ndarray, sp.spmatrix, DiscreteOperator]
OperatorFn = Callable[[float], MatrixLike]


def _as_sparse(m: MatrixLike) -> sp.csr_matrix:
    if isinstance(m, DiscreteOperator):
        return m.matrix
    return sp.csr_matrix(np.atleast_2d(m) if not sp.issparse(m) else m)


def _tridiagonal(m: sp.csr_matrix) -> np.ndarray | None:
    """Band storage when ``m`` is tridiagonal, else None."""
    coo = m.tocoo()
    if coo.nnz and np.max(np.abs(coo.row - coo.col)) > 1:
        return None
    n = m.shape[0]
    ab = np.zeros((3, n))
    ab[1] = m.diagonal(0)
    if n > 1:
        ab[0, 1:] = m.diagonal(1)
        ab[2, :-1] = m.diagonal(-1)
    return ab


def _solve_step(M: sp.csr_matrix, rhs: np.ndarray, step: int) -> np.ndarray:
    ab = _tridiagonal(M)
    try:
        if ab is not None:
            sol = sla.solve_banded((1, 1), ab, rhs, check_finite=False)
        else:
            sol = spla.splu(M.tocsc()).solve(rhs)
    except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        raise SingularSystemError(f"step matrix is singular at step {step}", step=step) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError(f"step matrix is singular at step {step}", step=step)
    return sol


def l1_march(alpha: float, tgrid: TimeGrid, a: np.ndarray, F, operator: MatrixLike | OperatorFn) -> np.ndarray:
    """March ``d_t^alpha (u - a) + A(t) u = F`` with the L1 scheme.

    Args:
        alpha: order in (0, 1).
        tgrid: time grid.
        a: initial value, shape ``(n,)``.
        F: source, shape ``(N + 1, n)``, or a callable ``F(k, t_k, u_prev) -> (n,)``
            evaluated once per step (used for explicit right-hand sides).
        operator: fixed matrix, or callable ``t -> matrix`` returning ``A(t)``.

    Returns:
        ``u`` with shape ``(N + 1, n)``; ``u[0] = a``.

    Raises:
        SingularSystemError: a step matrix could not be factorised; ``step`` is set.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    n = a.size
    N = tgrid.N
    fixed = None if callable(operator) else _as_sparse(operator)
    if fixed is not None and fixed.shape != (n, n):
        raise DomainError(f"operator shape {fixed.shape} does not match {n} unknowns")
    eye = sp.identity(n, format="csr")
    u = np.empty((N + 1, n))
    u[0] = a
    dv = np.zeros((N, n))  # v_{j+1} - v_j
    v_prev = np.zeros(n)
    for k in range(1, N + 1):
        tk = tgrid.nodes[k]
        A = fixed if fixed is not None else _as_sparse(operator(tk))
        w = l1_weights(alpha, tgrid, k)
        fk = F(k, tk, u[k - 1]) if callable(F) else F[k]
        rhs = fk - A @ a + w[-1] * v_prev
        if k > 1:
            rhs -= w[:-1] @ dv[: k - 1]
        v = _solve_step((w[-1] * eye + A).tocsr(), rhs, k)
        dv[k - 1] = v - v_prev
        v_prev = v
        u[k] = v + a
    return u


def solve_l1(p: ProblemSpec) -> Field:
    """Solve the problem with implicit L1 stepping on the full operator ``A(t)``."""
    ops = dict(zip(p.tgrid.nodes.tolist(), assemble_series(p.coeffs, p.grid, "A", p.tgrid.nodes)))
    u = l1_march(p.alpha, p.tgrid, p.a, p.F, lambda t: ops[float(t)])
    return Field(u, p.grid, p.tgrid, "l1", fingerprint=p.fingerprint())
