"""Eigenfunction-expansion (mild solution) solver.

With ``A0 phi_n = lambda_n phi_n`` and ``Q u = b . grad u + (c0 + c) u`` the
problem ``d_t^alpha (u - a) + (A0 - Q) u = F`` is equivalent to

    u(t) = sum_n [E_{a,1}(-lambda_n t**a) (a, phi_n) + L_n((F + Q u, phi_n))(t)] phi_n,

where ``L_n f = int_0^t k_n(t - s) f(s) ds`` with the kernel
``k_n(t) = t**(a-1) E_{a,a}(-lambda_n t**a)``. The convolutions are evaluated
by product integration: the modal forcing is interpolated linearly between
time nodes and integrated exactly against ``k_n`` through its first two
antiderivatives. The feedback ``Q u`` is handled by Picard sweeps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import roots_legendre

from .._parallel import pmap
from ..errors import ConvergenceError, DomainError, NonContractionError
from ..fractional_calculus import TimeGrid, TimeSignal
from ..mittag_leffler import MLParams, k_segment, kernel_antiderivatives, ml
from ..spatial_operator import EigenSystem, assemble, assemble_series, eigendecompose
from .problem import Field, ProblemSpec

__all__ = [
    "ModeResponse",
    "TruncationWarning",
    "convolution_weights",
    "mode_response",
    "propagate_S",
    "solve_mild",
]

# beyond this ratio of distance to step the antiderivative differences lose
# about eps * ratio**2; Gauss-Legendre on the smooth kernel is used instead,
# with error of order ratio**-6
_FAR_RATIO = 100.0
_GAUSS_S, _GAUSS_W = roots_legendre(3)
_GAUSS_S = 0.5 * (_GAUSS_S + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W

TRUNCATION_THRESHOLD = 1e-6


class TruncationWarning(UserWarning):
    """The modal projection discards a noticeable part of the feedback term."""


@dataclass(frozen=True, eq=False)
class ModeResponse:
    """Modal forcing ``f`` and its response ``L_n f``."""

    lam: float
    f: TimeSignal = field(repr=False)
    Lnf: TimeSignal = field(repr=False)

# panels in log(u) for the kernel interpolant
_LOG_PANEL = 0.25
_LOG_NODES = 16
_LOG_X = np.cos(np.pi * (np.arange(_LOG_NODES) + 0.5) / _LOG_NODES)
_LOG_BASIS = np.cos(np.outer(np.arange(_LOG_NODES), np.pi * (np.arange(_LOG_NODES) + 0.5) / _LOG_NODES))
# below this many points direct evaluation is cheaper than building a table
_DIRECT_LIMIT = 4096


class _LogInterp:
    """Piecewise Chebyshev interpolation in ``s = log u`` at fixed points ``u``.

    ``E_{alpha,alpha}(-lam exp(alpha s))`` is entire in ``s``, so sampling it on
    short panels reproduces the kernel to near machine precision. The points
    and their basis values do not depend on ``lam`` and are prepared once.
    """

    def __init__(self, u: np.ndarray):
        self.shape = u.shape
        s = np.log(u.ravel())
        s_lo, s_hi = float(s.min()), float(s.max())
        count = max(1, int(np.ceil((s_hi - s_lo) / _LOG_PANEL)))
        edges = np.linspace(s_lo, s_hi, count + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = max(0.5 * (edges[1] - edges[0]), 1e-300)
        self.nodes = np.exp(mid[:, None] + half * _LOG_X[None, :])
        j = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, count - 1)
        self.order = np.argsort(j, kind="stable")
        ends = np.cumsum(np.bincount(j, minlength=count))
        self.panels = [(p, e - c, e) for p, (c, e) in enumerate(zip(np.bincount(j, minlength=count), ends)) if c]
        x = np.clip((s[self.order] - mid[j[self.order]]) / half, -1.0, 1.0)
        # Chebyshev polynomials by the three-term recurrence, one row per degree
        basis = np.empty((_LOG_NODES, x.size))
        basis[0] = 0.5  # halves c_0 as the cosine transform requires
        basis[1] = x
        basis[2] = 2.0 * x * x - 1.0
        for d in range(3, _LOG_NODES):
            np.multiply(2.0 * x, basis[d - 1], out=basis[d])
            basis[d] -= basis[d - 2]
        self.basis = basis
        self.power = None
        self.u = u

    def kernel(self, alpha: float, lam: float) -> np.ndarray:
        if self.power is None or self.power[0] != alpha:
            self.power = (alpha, self.u ** (alpha - 1.0))
        vals = ml(MLParams(alpha, alpha), -lam * self.nodes**alpha)
        coef = (2.0 / _LOG_NODES) * vals @ _LOG_BASIS.T
        out = np.empty(self.order.size)
        for p, lo, hi in self.panels:
            out[self.order[lo:hi]] = coef[p] @ self.basis[:, lo:hi]
        return out.reshape(self.shape) * self.power[1]


def _smooth_kernel(alpha: float, lam: float, u: np.ndarray) -> np.ndarray:
    """``k(u) = u**(alpha-1) E_{alpha,alpha}(-lam u**alpha)`` for ``u > 0``."""
    if u.size <= _DIRECT_LIMIT:
        return u ** (alpha - 1.0) * ml(MLParams(alpha, alpha), -lam * u**alpha)
    return _LogInterp(u).kernel(alpha, lam)


def _gauss_points(a: np.ndarray, h: np.ndarray) -> np.ndarray:
    return a[:, None] + h[:, None] * _GAUSS_S[None, :]


def _hat_moments(
    alpha: float, lam: float, a: np.ndarray, h: np.ndarray, p_a=None, p_b=None, interp=None
) -> tuple[np.ndarray, np.ndarray]:
    """Integrals of ``k(u) (u - a)/h`` and ``k(u) (b - u)/h`` over ``[a, b = a + h]``.

    ``p_a`` and ``p_b`` optionally carry precomputed antiderivative pairs
    ``(P1, P2)`` at ``a`` and ``b``; ``interp`` optionally carries a
    :class:`_LogInterp` over the Gauss points of the far intervals.
    """
    b = a + h
    w_far = np.empty_like(a)
    w_near = np.empty_like(a)
    far = b > _FAR_RATIO * h
    close = ~far
    if np.any(close):
        if p_a is None:
            p1a, p2a = kernel_antiderivatives(alpha, lam, a[close])
            p1b, p2b = kernel_antiderivatives(alpha, lam, b[close])
        else:
            p1a, p2a = p_a[0][close], p_a[1][close]
            p1b, p2b = p_b[0][close], p_b[1][close]
        q = (p2b - p2a) / h[close]
        w_far[close] = p1b - q
        w_near[close] = q - p1a
    if np.any(far):
        hf = h[far]
        if interp is not None:
            kern = interp.kernel(alpha, lam)
        else:
            kern = _smooth_kernel(alpha, lam, _gauss_points(a[far], hf))
        w_far[far] = hf * (kern @ (_GAUSS_W * _GAUSS_S))
        w_near[far] = hf * (kern @ (_GAUSS_W * (1.0 - _GAUSS_S)))
    return w_far, w_near


class _PairPlan:
    """Index bookkeeping for a graded grid, shared by every mode."""

    def __init__(self, tgrid: TimeGrid, rows: tuple[int, int] | None = None):
        t = tgrid.nodes
        N = tgrid.N
        self.k_lo, k_hi = rows if rows is not None else (1, N + 1)
        # interval i = [t_i, t_{i+1}] feeds nodes k >= i + 1
        counts = np.arange(self.k_lo, k_hi)
        self.k = np.repeat(counts, counts)
        self.i = np.arange(self.k.size) - np.repeat(np.cumsum(counts) - counts, counts)
        i = self.i
        self.a = t[self.k] - t[i + 1]
        self.h = t[i + 1] - t[i]
        self.close = self.a + self.h <= _FAR_RATIO * self.h
        # antiderivatives only where differences are taken; nodes shared by
        # neighbouring intervals are evaluated once
        kc, ic = self.k[self.close], i[self.close]
        key_a = kc * (N + 1) + ic + 1
        key_b = kc * (N + 1) + ic
        idx = np.unique(np.concatenate([key_a, key_b]))
        self.dist = t[idx // (N + 1)] - t[idx % (N + 1)]
        self.pos_a = np.searchsorted(idx, key_a)
        self.pos_b = np.searchsorted(idx, key_b)
        far = ~self.close
        self.interp = _LogInterp(_gauss_points(self.a[far], self.h[far])) if np.any(far) else None
        self.N = N

    def weights(self, alpha: float, lam: float) -> np.ndarray:
        p1, p2 = kernel_antiderivatives(alpha, lam, self.dist)
        P_a = (np.zeros_like(self.a), np.zeros_like(self.a))
        P_b = (np.zeros_like(self.a), np.zeros_like(self.a))
        P_a[0][self.close], P_a[1][self.close] = p1[self.pos_a], p2[self.pos_a]
        P_b[0][self.close], P_b[1][self.close] = p1[self.pos_b], p2[self.pos_b]
        w_far, w_near = _hat_moments(alpha, lam, self.a, self.h, P_a, P_b, self.interp)
        rows = self.k - self.k_lo
        W = np.zeros((int(rows.max()) + 1 if rows.size else 0, self.N + 1))
        W[rows, self.i] += w_far
        # (k, i + 1) pairs are distinct for fixed k, so plain fancy-index accumulation is safe
        W[rows, self.i + 1] += w_near
        return W


def convolution_weights(alpha: float, lam: float, tgrid: TimeGrid, plan: _PairPlan | None = None) -> np.ndarray:
    """Lower-triangular ``W`` with ``(L f)(t_k) = sum_j W[k, j] f_j`` for piecewise-linear ``f``.

    ``plan`` reuses the pair bookkeeping of a non-uniform grid across modes.
    """
    N = tgrid.N
    W = np.zeros((N + 1, N + 1))
    if tgrid.kind == "uniform":
        h = tgrid.T / N
        # interval i seen from node k lies at distance a = (k - i - 1) h
        p1, p2 = kernel_antiderivatives(alpha, lam, np.arange(N + 1) * h)
        w_far, w_near = _hat_moments(
            alpha, lam, np.arange(N) * h, np.full(N, h), (p1[:-1], p2[:-1]), (p1[1:], p2[1:])
        )
        # W[k, j] = w_near[k-j] + w_far[k-j-1]; column 0 has no interval on its left
        col = np.zeros(N + 1)
        col[:N] += w_near
        col[1:] += w_far
        k, j = np.tril_indices(N + 1)
        W[k, j] = col[k - j]
        W[1:, 0] = w_far
        W[0, 0] = 0.0
        return W
    W[1:] = (plan if plan is not None else _PairPlan(tgrid)).weights(alpha, lam)
    return W


# pairs per block when a graded response is streamed instead of stored
_PAIR_BUDGET = 200_000


def _graded_response(alpha: float, lam: float, tgrid: TimeGrid, y: np.ndarray) -> np.ndarray:
    """``W @ y`` for a graded grid, built in row blocks of bounded pair count."""
    N = tgrid.N
    out = np.zeros(N + 1)
    k = 1
    while k <= N:
        # rows k..k_end-1 hold about (k_end**2 - k**2) / 2 pairs
        k_end = min(N + 1, max(k + 1, int(np.sqrt(k * k + 2 * _PAIR_BUDGET))))
        out[k:k_end] = _PairPlan(tgrid, (k, k_end)).weights(alpha, lam) @ y
        k = k_end
    return out


def mode_response(lam: float, f: TimeSignal, alpha: float, forcing: str = "linear") -> ModeResponse:
    """Evaluate ``(L_n f)(t_k)`` at every node.

    Args:
        lam: eigenvalue ``lambda_n >= 0``.
        f: modal forcing samples.
        alpha: fractional order.
        forcing: ``"linear"`` interpolates ``f`` between nodes; ``"constant"``
            uses the step average and exact kernel segment integrals.
    """
    if lam < 0:
        raise DomainError("mode_response needs lambda >= 0")
    grid, y = f.grid, f.values
    if forcing == "linear":
        if grid.kind == "uniform" or grid.N * (grid.N + 1) // 2 <= _PAIR_BUDGET:
            out = convolution_weights(alpha, lam, grid) @ y
        else:
            out = _graded_response(alpha, lam, grid, y)
    elif forcing == "constant":
        t = grid.nodes
        avg = 0.5 * (y[:-1] + y[1:])
        out = np.zeros(grid.N + 1)
        for k in range(1, grid.N + 1):
            seg = np.array([k_segment(alpha, lam, t[k] - t[i + 1], t[k] - t[i]).value for i in range(k)])
            out[k] = seg @ avg[:k]
    else:
        raise DomainError(f"unknown forcing interpolation {forcing!r}")
    out[0] = 0.0
    return ModeResponse(float(lam), f, TimeSignal(grid, out))


def propagate_S(eig: EigenSystem, a: np.ndarray, t: float, alpha: float) -> np.ndarray:
    """``S(t) a = sum_n E_{alpha,1}(-lambda_n t**alpha) (a, phi_n) phi_n``.

    ``alpha = 1`` gives the classical heat semigroup ``exp(-lambda_n t)``.
    """
    if t < 0:
        raise DomainError("propagate_S needs t >= 0")
    coef = eig.project(a)
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    decay = ml(MLParams(alpha, 1.0), -eig.eigenvalues * t**alpha)
    return eig.synthesize(coef * decay)


@dataclass(frozen=True)
class _MildOperator:
    eig: EigenSystem
    A0: sp.csr_matrix
    weights: np.ndarray  # (m, N+1, N+1)
    relax: np.ndarray  # (N+1, m)


def _prepare(p: ProblemSpec, m_modes: int | None) -> _MildOperator:
    A0 = assemble(p.coeffs, p.grid, "A0")
    eig = eigendecompose(A0, m_modes)
    if np.any(eig.eigenvalues < -1e-10 * max(1.0, float(np.max(np.abs(eig.eigenvalues))))):
        raise DomainError("A0 has a negative eigenvalue; increase c0")
    lams = np.maximum(eig.eigenvalues, 0.0)
    plan = None if p.tgrid.kind == "uniform" else _PairPlan(p.tgrid)
    # modes are independent; pmap keeps input order so the stack is thread-count invariant
    W = np.stack(pmap(lambda lam: convolution_weights(p.alpha, lam, p.tgrid, plan), lams.tolist()))
    t = p.tgrid.nodes
    relax = ml(MLParams(p.alpha, 1.0), -np.outer(t**p.alpha, lams))
    return _MildOperator(eig, A0.matrix, W, relax)


def _feedback_matrix(p: ProblemSpec, A0: sp.csr_matrix) -> sp.csr_matrix | None:
    """Block-diagonal ``Q(t_k) = A0 - A(t_k) = B(t_k) + c0 + c(t_k)`` over all time nodes.

    Returns None when the feedback vanishes identically.
    """
    blocks = [(A0 - op.matrix).tocsr() for op in assemble_series(p.coeffs, p.grid, "A", p.tgrid.nodes)]
    for blk in blocks:
        blk.eliminate_zeros()
    if all(blk.nnz == 0 for blk in blocks):
        return None
    return sp.block_diag(blocks, format="csr")


def solve_mild(
    p: ProblemSpec, m_modes: int | None = None, tol: float = 1e-12, max_sweeps: int = 200
) -> Field:
    """Mild solution by modal product integration and Picard sweeps on ``Q u``.

    Args:
        p: the problem.
        m_modes: number of eigenmodes (all when None).
        tol: sup-norm change between sweeps at which iteration stops.
        max_sweeps: sweep budget.

    Raises:
        NonContractionError: deltas failed to decrease over 5 consecutive sweeps.
        ConvergenceError: ``tol`` not met within ``max_sweeps``.
    """
    op = _prepare(p, m_modes)
    eig = op.eig
    w = p.grid.weights
    coef_a = eig.project(p.a)

    def modal_solve(g: np.ndarray) -> np.ndarray:
        # g: (N+1, n) forcing; returns (N+1, n)
        gc = eig.project(g)  # (N+1, m)
        resp = np.einsum("mkj,jm->km", op.weights, gc)
        return eig.synthesize(op.relax * coef_a[None, :] + resp)

    u = modal_solve(p.F)
    history: list[float] = []
    notes: list[str] = []
    Q = _feedback_matrix(p, op.A0)
    if Q is not None:
        worst_loss = 0.0
        for sweep in range(max_sweeps):
            q = (Q @ u.ravel()).reshape(u.shape)
            proj = eig.synthesize(eig.project(q))
            norm_q = np.sqrt(np.max(np.sum(w * q**2, axis=1)))
            if norm_q > 0:
                loss = np.sqrt(np.max(np.sum(w * (q - proj) ** 2, axis=1))) / norm_q
                worst_loss = max(worst_loss, loss)
            u_new = modal_solve(p.F + q)
            delta = float(np.max(np.abs(u_new - u)))
            history.append(delta)
            u = u_new
            if delta <= tol:
                break
            if len(history) >= 6 and all(history[-i] >= history[-i - 1] for i in range(1, 6)):
                raise NonContractionError("Picard sweeps are not contracting", history)
        else:
            raise ConvergenceError(f"Picard sweeps did not reach tol={tol}", history)
        if worst_loss > TRUNCATION_THRESHOLD:
            msg = f"mode truncation discards {worst_loss:.2e} of the feedback term"
            warnings.warn(msg, TruncationWarning, stacklevel=2)
            notes.append(msg)
    return Field(u, p.grid, p.tgrid, "spectral", tuple(history), tuple(notes), p.fingerprint())
