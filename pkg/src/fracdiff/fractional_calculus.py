"""Discrete Riemann-Liouville integrals and L1 Caputo derivatives on time grids.

Both operators act on nodal samples. The fractional integral uses product
integration (piecewise-linear interpolant of the integrand, kernel moments in
closed form); the Caputo derivative uses the L1 scheme (piecewise-linear
interpolant of the differentiated signal). Weights for a row are computed in a
form that stays accurate when a step is tiny compared with its distance from
the evaluation node, which is the normal situation on strongly graded grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError

__all__ = [
    "TimeGrid",
    "TimeSignal",
    "caputo_l1",
    "check_inverse",
    "l1_weights",
    "rl_integral",
    "rl_weights",
]


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time nodes ``0 = t_0 < ... < t_N = T``.

    Use :meth:`uniform` or :meth:`graded` rather than the raw constructor when
    possible; ``kind`` and ``gamma`` are descriptive metadata.
    """

    nodes: np.ndarray
    kind: str = "custom"
    gamma: float = 1.0

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise DomainError("a time grid needs N >= 2 steps")
        if nodes[0] != 0.0:
            raise DomainError("time grids start at t_0 = 0")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise DomainError("time nodes must be finite and strictly increasing")
        if self.kind not in ("uniform", "graded", "custom"):
            raise DomainError(f"unknown grid kind {self.kind!r}")
        if self.gamma < 1.0:
            raise DomainError("grading exponent must be >= 1")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, T: float, N: int) -> TimeGrid:
        if not T > 0:
            raise DomainError("horizon T must be positive")
        return cls(T * np.arange(N + 1) / N, "uniform", 1.0)

    @classmethod
    def graded(cls, T: float, N: int, gamma: float) -> TimeGrid:
        """Nodes ``T (k/N)**gamma``; ``gamma = 2/alpha`` suits ``t**alpha`` start-up layers."""
        if not T > 0:
            raise DomainError("horizon T must be positive")
        if gamma < 1.0:
            raise DomainError("grading exponent must be >= 1")
        return cls(T * (np.arange(N + 1) / N) ** gamma, "graded", float(gamma))

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def refine(self) -> TimeGrid:
        """Grid of the same kind with twice as many steps."""
        if self.kind == "uniform":
            return TimeGrid.uniform(self.T, 2 * self.N)
        if self.kind == "graded":
            return TimeGrid.graded(self.T, 2 * self.N, self.gamma)
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return TimeGrid(np.sort(np.concatenate([self.nodes, mid])))

    def same_as(self, other: TimeGrid) -> bool:
        return self.nodes.shape == other.nodes.shape and bool(np.all(self.nodes == other.nodes))


@dataclass(frozen=True, eq=False)
class TimeSignal:
    """Samples of a scalar function at the nodes of a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise DomainError(f"expected {self.grid.nodes.size} values, got shape {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: TimeGrid, fn) -> TimeSignal:
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float) * np.ones(grid.nodes.size))


# {{{ product-integration weights


_SERIES_TERMS = 18


def _binomial_moments(beta: float, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``G1 = int_0^1 (1+rs)^(beta-1) s ds`` and ``G0 - G1`` by binomial series (``r < 0.1``)."""
    g1 = np.zeros_like(r)
    g01 = np.zeros_like(r)
    c = 1.0
    rn = np.ones_like(r)
    for n in range(_SERIES_TERMS):
        g1 += c * rn / (n + 2)
        g01 += c * rn / ((n + 1) * (n + 2))
        c *= (beta - 1.0 - n) / (n + 1)
        rn = rn * r
    return g1, g01


def _pl_weights(beta: float, a: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moments of ``u**(beta-1)`` against the two hat functions on ``[a, a+h]``.

    Returns ``(w_far, w_near)``: the weights of the node at distance ``a + h``
    and of the node at distance ``a`` (without the ``1/Gamma(beta)`` factor).
    """
    b = a + h
    w_far = np.empty_like(a)
    w_near = np.empty_like(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = h / a
    small = a > 10.0 * h
    d = ~small
    if np.any(d):
        ad, bd, hd = a[d], b[d], h[d]
        i0 = (bd**beta - ad**beta) / beta
        i1 = (bd ** (beta + 1.0) - ad ** (beta + 1.0)) / (beta + 1.0)
        w_far[d] = (i1 - ad * i0) / hd
        w_near[d] = (bd * i0 - i1) / hd
    if np.any(small):
        g1, g01 = _binomial_moments(beta, r[small])
        scale = h[small] * a[small] ** (beta - 1.0)
        w_far[small] = scale * g1
        w_near[small] = scale * g01
    return w_far, w_near


def rl_weights(grid: TimeGrid, beta: float, k: int) -> np.ndarray:
    """Weights ``c_j`` with ``(J^beta f)(t_k) = sum_j c_j f_j``, ``j = 0..k``."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if not 0 <= k <= grid.N:
        raise DomainError(f"node index {k} out of range 0..{grid.N}")
    out = np.zeros(k + 1)
    if k == 0:
        return out
    t = grid.nodes
    a = t[k] - t[1 : k + 1]
    h = np.diff(t[: k + 1])
    w_far, w_near = _pl_weights(beta, a, h)
    out[:k] += w_far
    out[1:] += w_near
    return out / gamma_fn(beta)


def rl_integral(f: TimeSignal, beta: float) -> TimeSignal:
    """``(J^beta f)(t_k)`` at every node by product integration.

    The integrand is interpolated linearly between nodes and the kernel
    ``(t-s)**(beta-1)/Gamma(beta)`` is integrated exactly against each piece, so
    ``J^1`` is the running trapezoid rule and constants are integrated exactly.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    grid, y = f.grid, f.values
    out = np.zeros(grid.N + 1)
    for k in range(1, grid.N + 1):
        out[k] = rl_weights(grid, beta, k) @ y[: k + 1]
    return TimeSignal(grid, out)


# }}}


# {{{ L1 scheme


def _check_order(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def l1_weights(alpha: float, grid: TimeGrid, k: int) -> np.ndarray:
    """L1 weights ``w_{k,j}``, ``j = 0..k-1``.

    ``caputo_l1(y)[k] = sum_j w_{k,j} (y_{j+1} - y_j)`` with
    ``w_{k,j} = ((t_k - t_j)**(1-a) - (t_k - t_{j+1})**(1-a)) / (h_j Gamma(2-a))``.
    The weights are positive and increase with ``j``.
    """
    _check_order(alpha)
    if not 1 <= k <= grid.N:
        raise DomainError(f"L1 weights need 1 <= k <= {grid.N}, got {k}")
    t = grid.nodes
    a = t[k] - t[1 : k + 1]
    h = np.diff(t[: k + 1])
    p = 1.0 - alpha
    w = np.empty(k)
    w[-1] = h[-1] ** p / h[-1]
    if k > 1:
        aa, hh = a[:-1], h[:-1]
        # (a+h)**p - a**p without cancellation
        w[:-1] = aa**p * np.expm1(p * np.log1p(hh / aa)) / hh
    return w / gamma_fn(2.0 - alpha)


def caputo_l1(y: TimeSignal, alpha: float) -> TimeSignal:
    """L1 approximation of the pointwise Caputo derivative at ``t_1..t_N``.

    The value at ``t_0`` has no history to act on and is reported as ``nan``.
    """
    _check_order(alpha)
    grid = y.grid
    dy = np.diff(y.values)
    out = np.full(grid.N + 1, np.nan)
    for k in range(1, grid.N + 1):
        out[k] = l1_weights(alpha, grid, k) @ dy[:k]
    return TimeSignal(grid, out)


def check_inverse(f: TimeSignal, alpha: float) -> float:
    """Max-norm of ``caputo_l1(rl_integral(f, alpha)) - f`` over ``t_1..t_N``."""
    g = rl_integral(f, alpha)
    d = caputo_l1(g, alpha)
    return float(np.max(np.abs(d.values[1:] - f.values[1:])))


# }}}
