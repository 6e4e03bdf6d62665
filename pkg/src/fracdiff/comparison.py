"""Discrete certificates for positivity and comparison statements.

Every check evaluates a signed margin at each space-time node (negative means
a violation), reports its minimum together with the node where it occurs, and
passes iff that minimum is at least ``-tolerance``. Hypotheses of a statement
are verified first; when they fail a :class:`PreconditionError` is raised,
which callers must keep distinct from a failed check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from ._parallel import pmap
from .errors import DomainError, PreconditionError
from .fractional_calculus import TimeGrid, TimeSignal, l1_weights
from .spatial_operator import (
    CoefficientSet,
    SpaceGrid,
    assemble,
    assemble_series,
    coercivity_check,
    solve_psi,
)
from .solvers import Field, ProblemSpec, solve

__all__ = [
    "TOLERANCES",
    "BarrierParams",
    "CheckReport",
    "a1_form",
    "auto_barrier",
    "barrier_certificate",
    "barrier_suite",
    "c_monotonicity_suite",
    "check_c_monotonicity",
    "check_comparison",
    "check_example_bound",
    "check_positivity",
    "check_sigma_monotonicity",
    "coercivity_suite",
    "comparison_suite",
    "compatible_data",
    "example_bound",
    "extremum_principle_probe",
    "extremum_suite",
    "positivity_suite",
    "random_problem",
    "scheme_flux",
    "random_signal",
    "sigma_monotonicity_suite",
]

# discretisations may undershoot zero by their truncation error
TOLERANCES = {"spectral": 1e-8, "l1": 1e-6, "picard": 1e-6}


def _tolerance(tol: float | None, producer: str) -> float:
    if tol is not None:
        if not tol >= 0:
            raise DomainError(f"tolerance must be non-negative, got {tol!r}")
        return float(tol)
    return TOLERANCES[producer]


# {{{ report


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check.

    Attributes:
        check_name: which check produced the report.
        passed: ``worst_violation >= -tolerance``.
        worst_violation: minimum signed margin; negative values are violations.
        witness: ``(ix, it)`` space and time index of the worst node.
        tolerance: tolerance used.
        fingerprint: fingerprint of the checked instance (empty if unknown).
        in_hypothesis: False for diagnostic runs outside the hypotheses of the statement.
        details: extra diagnostics (sub-margins, chosen constants).
    """

    check_name: str
    passed: bool
    worst_violation: float
    witness: tuple[int, int]
    tolerance: float
    fingerprint: str = ""
    in_hypothesis: bool = True
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "pass": bool(self.passed),
            "worst_violation": float(self.worst_violation),
            "witness": {"ix": int(self.witness[0]), "it": int(self.witness[1])},
            "tolerance": float(self.tolerance),
            "fingerprint": self.fingerprint,
            "in_hypothesis": bool(self.in_hypothesis),
            "details": {k: self.details[k] for k in sorted(self.details)},
        }


def _report(
    name: str,
    margin: np.ndarray,
    tol: float,
    fingerprint: str = "",
    *,
    it_offset: int = 0,
    ix_map: np.ndarray | None = None,
    in_hypothesis: bool = True,
    details: dict | None = None,
) -> CheckReport:
    """Report for a ``(time, space)`` margin array; NaN entries are ignored."""
    margin = np.atleast_2d(np.asarray(margin, dtype=float))
    masked = np.where(np.isnan(margin), np.inf, margin)
    flat = int(np.argmin(masked))
    it, ix = np.unravel_index(flat, margin.shape)
    worst = float(masked[it, ix])
    if ix_map is not None:
        ix = ix_map[ix]
    return CheckReport(
        name, worst >= -tol, worst, (int(ix), int(it) + it_offset), tol, fingerprint, in_hypothesis, details or {}
    )


# }}}


# {{{ sampling helpers


def _samples(fn, grid: SpaceGrid, ts: np.ndarray) -> np.ndarray:
    """Sample a coefficient-style function ``fn(x, t)`` at every node, shape ``(len(ts), n)``."""
    cs = CoefficientSet(c=fn)
    pts = grid.points
    return np.stack([cs.reaction(pts, t) for t in ts])


def _require_nonneg_data(p: ProblemSpec) -> None:
    if np.any(p.a < 0) or np.any(p.F < 0):
        raise PreconditionError("the statement needs a >= 0 and F >= 0 at every node")


def _field_for(p: ProblemSpec, solver: str, settings: dict | None) -> Field:
    extra = dict(settings or {}) if solver == "spectral" else {}
    return solve(p, solver, **extra)


# }}}


# {{{ checks


def check_positivity(u: Field, tol: float | None = None) -> CheckReport:
    """``u >= -tol`` at every node (non-negative data give a non-negative solution)."""
    tol = _tolerance(tol, u.producer)
    return _report("positivity", u.values, tol, u.fingerprint)


def check_comparison(u1: Field, u2: Field, tol: float | None = None) -> CheckReport:
    """``u1 - u2 >= -tol`` at every node (ordered data give ordered solutions).

    Raises:
        DomainError: the fields live on different grids.
    """
    if not u1.compatible(u2):
        raise DomainError("fields are defined on different grids")
    if tol is None:
        tol = max(TOLERANCES[u1.producer], TOLERANCES[u2.producer])
    tol = _tolerance(tol, u1.producer)
    return _report("comparison", u1.values - u2.values, tol, u1.fingerprint)


def check_c_monotonicity(
    p: ProblemSpec, c1, c2, tol: float | None = None, solver: str = "spectral", settings: dict | None = None
) -> CheckReport:
    """Solve with reaction ``c1`` and ``c2 <= c1`` and check ``u(c1) >= u(c2)``.

    Raises:
        PreconditionError: ``c1 < c2`` somewhere, or negative data.
    """
    _require_nonneg_data(p)
    ts = p.tgrid.nodes
    if np.any(_samples(c1, p.grid, ts) < _samples(c2, p.grid, ts)):
        raise PreconditionError("c-monotonicity needs c1 >= c2 at every node")
    p1 = p.with_(coeffs=p.coeffs.replace(c=c1))
    p2 = p.with_(coeffs=p.coeffs.replace(c=c2))
    u1 = _field_for(p1, solver, settings)
    u2 = _field_for(p2, solver, settings)
    tol = _tolerance(tol, solver)
    return _report("c-mono", u1.values - u2.values, tol, p1.fingerprint())


def check_sigma_monotonicity(
    p: ProblemSpec,
    sigma1,
    sigma2,
    sigma0: float,
    tol: float | None = None,
    solver: str = "spectral",
    settings: dict | None = None,
    *,
    out_of_hypothesis: bool = False,
) -> CheckReport:
    """Solve with Robin coefficients ``sigma1 <= sigma2`` and check ``u(sigma1) >= u(sigma2)``.

    The statement assumes a strictly negative reaction ``c`` and
    ``sigma1 >= sigma0 > 0``. With ``out_of_hypothesis=True`` these two
    assumptions may fail and the report is labelled as a diagnostic
    (``in_hypothesis=False``); the ordering ``sigma2 >= sigma1`` is always required.

    Raises:
        PreconditionError: ``sigma2 < sigma1`` somewhere, negative data, or
            (unless diagnostic) ``c >= 0`` somewhere or ``sigma1 >= sigma0 > 0`` broken.
    """
    _require_nonneg_data(p)
    bnd = p.grid.points[p.grid.boundary]
    s1 = CoefficientSet(sigma=sigma1).robin(bnd)
    s2 = CoefficientSet(sigma=sigma2).robin(bnd)
    if np.any(s2 < s1):
        raise PreconditionError("sigma-monotonicity needs sigma2 >= sigma1 on the boundary")
    c = np.stack([p.coeffs.reaction(p.grid.points, t) for t in p.tgrid.nodes])
    if not out_of_hypothesis:
        if not sigma0 > 0:
            raise PreconditionError("sigma-monotonicity needs sigma0 > 0")
        if np.any(s1 < sigma0):
            raise PreconditionError("sigma-monotonicity needs sigma1 >= sigma0 on the boundary")
        if np.any(c >= 0):
            raise PreconditionError("sigma-monotonicity assumes c < 0 at every node")
    in_hyp = bool(np.all(c < 0) and sigma0 > 0 and np.all(s1 >= sigma0))
    p1 = p.with_(coeffs=p.coeffs.replace(sigma=sigma1))
    p2 = p.with_(coeffs=p.coeffs.replace(sigma=sigma2))
    u1 = _field_for(p1, solver, settings)
    u2 = _field_for(p2, solver, settings)
    tol = _tolerance(tol, solver)
    return _report("sigma-mono", u1.values - u2.values, tol, p1.fingerprint(), in_hypothesis=in_hyp)


def example_bound(alpha: float, delta: float, beta: float, t: np.ndarray) -> np.ndarray:
    """``delta Gamma(beta+1) / Gamma(alpha+beta+1) t**(alpha+beta)``."""
    t = np.asarray(t, dtype=float)
    return delta * np.exp(gammaln(beta + 1.0) - gammaln(alpha + beta + 1.0)) * t ** (alpha + beta)


def check_example_bound(
    p: ProblemSpec,
    delta: float,
    beta: float,
    tol: float | None = None,
    solver: str = "spectral",
    settings: dict | None = None,
    u: Field | None = None,
) -> CheckReport:
    """Lower bound ``u >= delta Gamma(beta+1)/Gamma(alpha+beta+1) t**(alpha+beta)``.

    Applies to Neumann problems with zero initial value, no reaction term and a
    source ``F >= delta t**beta``. ``u`` may be supplied to skip the solve.

    Raises:
        PreconditionError: any of the hypotheses fails on the grid.
    """
    if delta < 0 or beta < 0:
        raise PreconditionError("the bound needs delta >= 0 and beta >= 0")
    ts = p.tgrid.nodes
    pts = p.grid.points
    if np.any(p.coeffs.robin(pts[p.grid.boundary]) != 0):
        raise PreconditionError("the bound is stated for the Neumann condition sigma = 0")
    if np.any(p.a != 0):
        raise PreconditionError("the bound needs a zero initial value")
    if any(np.any(p.coeffs.reaction(pts, t) != 0) for t in ts):
        raise PreconditionError("the bound needs an operator without zeroth-order term")
    with np.errstate(divide="ignore"):
        lower = delta * ts**beta if beta > 0 else np.full(ts.shape, float(delta))
    if np.any(p.F < lower[:, None]):
        raise PreconditionError("the bound needs F >= delta t**beta at every node")
    if u is None:
        u = _field_for(p, solver, settings)
    elif not (u.grid.same_as(p.grid) and u.tgrid.same_as(p.tgrid)):
        raise DomainError("field and problem use different grids")
    tol = _tolerance(tol, u.producer)
    margin = u.values - example_bound(p.alpha, delta, beta, ts)[:, None]
    return _report("example-bound", margin, tol, p.fingerprint())


def extremum_principle_probe(y: TimeSignal, alpha: float, tol: float = 1e-6) -> CheckReport:
    """L1 Caputo derivative at a minimiser ``t0 > 0`` is at most ``tol``.

    When the minimum is attained at several nodes the first one after ``t_0``
    is used.

    Raises:
        PreconditionError: the minimum is attained only at ``t_0 = 0``.
    """
    vals = y.values
    hits = np.flatnonzero(vals == vals.min())
    hits = hits[hits > 0]
    if hits.size == 0:
        raise PreconditionError("the minimum is attained only at t = 0")
    k = int(hits[0])
    d = float(l1_weights(alpha, y.grid, k) @ np.diff(vals[: k + 1]))
    return CheckReport("extremum", -d >= -tol, -d, (0, k), float(tol), details={"caputo": d})


# }}}


# {{{ barrier certificate


@dataclass(frozen=True, eq=False)
class BarrierParams:
    """Constants of the barrier ``w = u + epsilon (M + psi + t**alpha)``.

    ``psi`` has shape ``(N + 1, n)`` and solves ``A1 psi = 1`` with Robin data
    1 at every time node.
    """

    epsilon: float
    M: float
    psi: np.ndarray = field(repr=False)


def a1_form(p: ProblemSpec) -> ProblemSpec:
    """The problem with ``A`` replaced by ``A1`` (reaction ``c = -b0``, no shift)."""
    b0 = p.coeffs.b0
    c = (lambda x, t: -np.asarray(b0(x, t), dtype=float)) if callable(b0) else -float(b0)
    return p.with_(coeffs=p.coeffs.replace(c=c, c0=0.0))


def _caputo_rows(values: np.ndarray, alpha: float, tgrid: TimeGrid) -> np.ndarray:
    """L1 derivative of every column at ``t_1..t_N``, shape ``(N, n)``."""
    dv = np.diff(values, axis=0)
    return np.stack([l1_weights(alpha, tgrid, k) @ dv[:k] for k in range(1, tgrid.N + 1)])


def auto_barrier(p: ProblemSpec, epsilon: float = 1e-3) -> BarrierParams:
    """``psi`` per time node and ``M = 1 + max(-psi) + max((1 - d psi)/b0)``.

    Both maxima are clamped at zero, which keeps ``M + psi >= 1`` and
    ``d psi + b0 M >= 1`` whatever the sign of ``psi``.
    """
    pts = p.grid.points
    ts = p.tgrid.nodes
    psi = np.stack([solve_psi(p.coeffs, p.grid, t) for t in ts])
    dpsi = _caputo_rows(psi, p.alpha, p.tgrid)
    b0 = np.stack([p.coeffs.zeroth(pts, t) for t in ts[1:]])
    M = 1.0 + max(0.0, float(np.max(-psi))) + max(0.0, float(np.max((1.0 - dpsi) / b0)))
    return BarrierParams(float(epsilon), M, psi)


def scheme_flux(p: ProblemSpec, residual: np.ndarray, t: float) -> np.ndarray:
    """Robin datum ``a dw/dnu + sigma w`` implied by the discrete boundary rows.

    A boundary row of ``A1`` is the half-cell balance with the homogeneous
    condition built in, so for Robin datum ``g`` its residual is the equation
    residual plus ``g * (2/h -+ b/a)`` (see :func:`robin_load`). The equation
    residual at a boundary node is taken from its inward neighbour, which
    makes the flux exact for the discrete solution itself. Corner nodes
    assume the same datum on both faces.

    Args:
        p: problem in ``A1`` form.
        residual: ``caputo_l1(w) + A1 w - F`` at time ``t``, one value per node.
        t: time at which the drift is sampled.

    Returns:
        Flux per boundary node, ordered like ``np.flatnonzero(grid.boundary)``.
    """
    grid = p.grid
    pts = grid.points
    drift = p.coeffs.drift(pts, t, grid.dim)
    adiag = p.coeffs.diffusion(pts, grid.dim)
    idx = np.arange(grid.size).reshape(grid.shape)
    bidx = np.flatnonzero(grid.boundary)
    multi = np.array(np.unravel_index(bidx, grid.shape)).T
    load = np.zeros(bidx.size)
    inner = multi.copy()
    for axis in range(grid.dim):
        h = grid.h[axis]
        last = grid.shape[axis] - 1
        ratio = drift[bidx, axis] / adiag[bidx, axis]
        lo, hi = multi[:, axis] == 0, multi[:, axis] == last
        load += np.where(lo, 2.0 / h - ratio, 0.0) + np.where(hi, 2.0 / h + ratio, 0.0)
        inner[lo, axis] = 1
        inner[hi, axis] = last - 1
    nbr = idx[tuple(inner.T)]
    return (residual[bidx] - residual[nbr]) / load


def barrier_certificate(
    u: Field, p: ProblemSpec, bp: BarrierParams | None = None, tol: float | None = None, epsilon: float = 1e-3
) -> CheckReport:
    """Evaluate the barrier ``w = u + epsilon (M + psi + t**alpha)`` on a solution.

    ``u`` must solve ``d_t^alpha (u - a) + A1 u = F`` (see :func:`a1_form`).
    From ``t_1`` on, three margins are checked:

    * the discrete residual ``caputo_l1(w) + A1 w - F``,
    * the boundary flux ``a dw/dnu + sigma w`` minus ``epsilon`` (see :func:`scheme_flux`),
    * ``w`` itself (at every node).

    The report carries the minimum of the three; ``details`` lists each.

    Raises:
        PreconditionError: ``b0 <= 0`` or the barrier constants violate
            ``M + psi >= 0`` or ``d psi + b0 M > 0``.
    """
    if not (u.grid.same_as(p.grid) and u.tgrid.same_as(p.tgrid)):
        raise DomainError("field and problem use different grids")
    pts = p.grid.points
    ts = p.tgrid.nodes
    b0 = np.stack([p.coeffs.zeroth(pts, t) for t in ts])
    if np.any(b0 <= 0):
        raise PreconditionError("the barrier needs b0 > 0")
    if bp is None:
        bp = auto_barrier(p, epsilon)
    if bp.epsilon < 0 or not bp.M > 0:
        raise PreconditionError("the barrier needs epsilon >= 0 and M > 0")
    psi = np.asarray(bp.psi, dtype=float)
    if psi.shape != u.values.shape:
        raise DomainError(f"psi has shape {psi.shape}, expected {u.values.shape}")
    dpsi = _caputo_rows(psi, p.alpha, p.tgrid)
    if np.any(bp.M + psi < 0) or np.any(dpsi + b0[1:] * bp.M <= 0):
        raise PreconditionError("barrier constants violate M + psi >= 0 or d psi + b0 M > 0")
    tol = _tolerance(tol, u.producer)

    w = u.values + bp.epsilon * (bp.M + psi + ts[:, None] ** p.alpha)
    ops = assemble_series(p.coeffs, p.grid, "A1", ts)
    # u(0) = a, so the L1 derivative of w acts on w - a as the equation requires
    dw = _caputo_rows(w, p.alpha, p.tgrid)
    residual = np.stack([dw[k - 1] + ops[k] @ w[k] - p.F[k] for k in range(1, ts.size)])
    flux = np.stack([scheme_flux(p, residual[k - 1], ts[k]) for k in range(1, ts.size)]) - bp.epsilon
    bidx = np.flatnonzero(p.grid.boundary)

    parts = {
        "residual": _report("barrier", residual, tol, it_offset=1),
        "flux": _report("barrier", flux, tol, it_offset=1, ix_map=bidx),
        "min_w": _report("barrier", w, tol),
    }
    worst_key = min(parts, key=lambda k: parts[k].worst_violation)
    worst = parts[worst_key]
    details = {k: v.worst_violation for k, v in parts.items()}
    details.update({"component": worst_key, "M": bp.M, "epsilon": bp.epsilon})
    return CheckReport(
        "barrier", worst.worst_violation >= -tol, worst.worst_violation, worst.witness, tol, p.fingerprint(),
        True, details,
    )


# }}}


# {{{ random instances and suites


def random_problem(
    rng: np.random.Generator,
    *,
    n: int = 41,
    N: int = 64,
    alpha: float | None = None,
    sigma_kind: str = "const",
    reaction: str = "mixed",
    drift: float = 1.0,
    T: float = 1.0,
    b0: float | None = None,
) -> ProblemSpec:
    """A random smooth 1D instance with non-negative data.

    Args:
        rng: source of randomness.
        n: spatial nodes on [0, 1].
        N: time steps (graded with exponent ``2/alpha``).
        alpha: order; drawn from [0.2, 0.9] when None.
        sigma_kind: ``"zero"``, ``"const"`` or ``"varying"``.
        reaction: ``"mixed"`` (either sign), ``"negative"`` (``c < 0``) or ``"none"``.
        drift: amplitude bound for ``b``.
        T: horizon.
        b0: zeroth-order coefficient for the ``A1`` form; defaults to a value
            above ``max|b|**2 / (4 min a)`` plus ``max|c|``.
    """
    if alpha is None:
        alpha = float(rng.uniform(0.2, 0.9))
    grid = SpaceGrid.interval(n)
    tgrid = TimeGrid.graded(T, N, 2.0 / alpha)
    x = grid.x
    a0 = rng.uniform(0.5, 1.5)
    a1 = rng.uniform(0.0, 0.4) * a0
    ka, pa = int(rng.integers(1, 4)), rng.uniform(0, 2 * np.pi)
    bb, pb = rng.uniform(-drift, drift), rng.uniform(0, 2 * np.pi)
    if reaction == "mixed":
        cm, ca = rng.uniform(-1.0, 0.5), rng.uniform(0.0, 0.5)
    elif reaction == "negative":
        # c <= cm + ca (1 + T) <= cm / 2 < 0
        cm = rng.uniform(-2.0, -0.6)
        ca = rng.uniform(0.0, 0.5) * abs(cm) / (1.0 + T)
    elif reaction == "none":
        cm, ca = 0.0, 0.0
    else:
        raise DomainError(f"unknown reaction kind {reaction!r}")
    if sigma_kind == "zero":
        sigma = 0.0
    elif sigma_kind == "const":
        sigma = float(rng.uniform(0.5, 2.0))
    elif sigma_kind == "varying":
        s0, s1 = rng.uniform(0.5, 1.5), rng.uniform(0.2, 1.0)
        sigma = lambda xx, t, s0=s0, s1=s1: s0 + s1 * xx[:, 0]  # noqa: E731
    else:
        raise DomainError(f"unknown sigma kind {sigma_kind!r}")
    if b0 is None:
        b0 = bb**2 / (4.0 * (a0 - a1)) + abs(cm) + ca + 1.0

    coeffs = CoefficientSet(
        a=lambda xx, t, a0=a0, a1=a1, k=ka, ph=pa: a0 + a1 * np.sin(k * np.pi * xx[:, 0] + ph),
        b=lambda xx, t, bb=bb, ph=pb: bb * np.cos(np.pi * xx[:, 0] + ph) * (1.0 + 0.5 * t),
        c=(lambda xx, t, cm=cm, ca=ca: cm + ca * np.sin(np.pi * xx[:, 0]) ** 2 * (1.0 + t)) if ca or cm else 0.0,
        b0=float(b0),
        sigma=sigma,
        # the shift only splits A into A0 - Q; absorbing the negative part of c
        # keeps the explicit feedback small
        c0=max(0.0, -float(cm)),
    )
    ka0 = rng.uniform(-1, 1, 3)
    a = (ka0[0] + ka0[1] * np.cos(np.pi * x) + ka0[2] * np.sin(2 * np.pi * x)) ** 2
    kf = rng.uniform(-1, 1, 3)
    shape = (kf[0] + kf[1] * np.cos(2 * np.pi * x) + kf[2] * np.sin(np.pi * x)) ** 2
    growth = rng.uniform(0.0, 1.0)
    F = shape[None, :] * (1.0 + growth * np.sin(np.pi * tgrid.nodes / T) ** 2)[:, None]
    return ProblemSpec(alpha, grid, tgrid, coeffs, a, F)


def _spawn(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


_SIGMA_KINDS = ("zero", "const", "varying")


def positivity_suite(
    seed: int, count: int = 100, solvers: Sequence[str] = ("spectral", "l1"), **instance
) -> list[CheckReport]:
    """Positivity on ``count`` random instances cycling through the sigma kinds."""

    def one(arg):
        i, rng = arg
        p = random_problem(rng, sigma_kind=_SIGMA_KINDS[i % 3], **instance)
        return [check_positivity(solve(p, s)) for s in solvers]

    return [r for rs in pmap(one, list(enumerate(_spawn(seed, count)))) for r in rs]


def _bump(rng: np.random.Generator, x: np.ndarray) -> np.ndarray:
    c, w = rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.3)
    return rng.uniform(0.1, 1.0) * np.exp(-(((x - c) / w) ** 2))


def comparison_suite(
    seed: int, count: int = 50, solvers: Sequence[str] = ("spectral", "l1"), **instance
) -> list[CheckReport]:
    """Data ordering: ``(a + bump, F + bump)`` against ``(a, F)``."""

    def one(arg):
        i, rng = arg
        p2 = random_problem(rng, sigma_kind=_SIGMA_KINDS[i % 3], **instance)
        x = p2.grid.x
        mode = i % 3  # bump in a, in F, or in both
        da = _bump(rng, x) if mode in (0, 2) else 0.0
        dF = _bump(rng, x)[None, :] * (1.0 + p2.tgrid.nodes[:, None]) if mode in (1, 2) else 0.0
        p1 = p2.with_(a=p2.a + da, F=p2.F + dF)
        return [check_comparison(solve(p1, s), solve(p2, s)) for s in solvers]

    return [r for rs in pmap(one, list(enumerate(_spawn(seed, count)))) for r in rs]


def c_monotonicity_suite(
    seed: int, count: int = 50, solvers: Sequence[str] = ("spectral", "l1"), **instance
) -> list[CheckReport]:
    """Reaction ordering ``c1 = c2 + s(x, t)`` with ``s >= 0``."""

    def one(arg):
        i, rng = arg
        p = random_problem(rng, sigma_kind=_SIGMA_KINDS[i % 3], **instance)
        c2 = p.coeffs.c
        amp, k = rng.uniform(0.1, 1.0), int(rng.integers(1, 4))
        c1 = lambda xx, t, amp=amp, k=k: (  # noqa: E731
            CoefficientSet(c=c2).reaction(xx, t) + amp * np.sin(k * np.pi * xx[:, 0]) ** 2
        )
        return [check_c_monotonicity(p, c1, c2, solver=s) for s in solvers]

    return [r for rs in pmap(one, list(enumerate(_spawn(seed, count)))) for r in rs]


def sigma_monotonicity_suite(
    seed: int, count: int = 50, solvers: Sequence[str] = ("spectral", "l1"), **instance
) -> list[CheckReport]:
    """Robin ordering ``sigma2 = sigma1 + profile >= sigma1 >= sigma0 > 0`` with ``c < 0``."""

    def one(arg):
        i, rng = arg
        p = random_problem(rng, sigma_kind="const", reaction="negative", **instance)
        sigma0 = float(rng.uniform(0.1, 0.5))
        s1 = sigma0 + float(rng.uniform(0.0, 1.0))
        d0, d1 = rng.uniform(0.0, 1.0, 2)
        sigma2 = lambda xx, t, s1=s1, d0=d0, d1=d1: s1 + d0 + d1 * xx[:, 0]  # noqa: E731
        return [check_sigma_monotonicity(p, s1, sigma2, sigma0, solver=s) for s in solvers]

    return [r for rs in pmap(one, list(enumerate(_spawn(seed, count)))) for r in rs]


def compatible_data(p: ProblemSpec, rng: np.random.Generator, kind: str = "source") -> ProblemSpec:
    """Replace ``(a, F)`` by non-negative data compatible with the boundary condition at ``t = 0``.

    ``kind="source"``: ``a = A1(0)^{-1} g`` and ``F = g (1 + s t)`` for a positive
    profile ``g``, so ``F(0) = A1(0) a``. ``kind="decay"``: ``F = 0`` and ``a`` is
    the positive principal eigenvector of ``A1(0)``, scaled to maximum 1.
    Incompatible data give the solution an initial boundary layer that no
    fixed spatial grid resolves.
    """
    A1 = assemble(p.coeffs, p.grid, "A1", 0.0).dense()
    x = p.grid.x
    if kind == "source":
        k = rng.uniform(-1, 1, 2)
        g = 1.0 + 0.5 * (k[0] * np.cos(np.pi * x) + k[1] * np.sin(2 * np.pi * x)) ** 2
        a = np.linalg.solve(A1, g)
        s = rng.uniform(0.0, 2.0)
        F = g[None, :] * (1.0 + s * p.tgrid.nodes)[:, None]
    elif kind == "decay":
        vals, vecs = np.linalg.eig(A1)
        v = np.real(vecs[:, np.argmin(np.real(vals))])
        a = v / v[np.argmax(np.abs(v))]
        F = np.zeros_like(p.F)
    else:
        raise DomainError(f"unknown data kind {kind!r}")
    return p.with_(a=a, F=F)


def barrier_suite(seed: int, count: int = 10, epsilon: float = 1e-3, tol: float = 1e-5, **instance) -> list[CheckReport]:
    """Barrier certificate on L1 solutions of random ``A1``-form problems with compatible data."""
    instance.setdefault("n", 101)

    def one(arg):
        i, rng = arg
        p = a1_form(random_problem(rng, sigma_kind=_SIGMA_KINDS[i % 3], **instance))
        p = compatible_data(p, rng, "source" if i % 2 == 0 else "decay")
        return barrier_certificate(solve(p, "l1"), p, tol=tol, epsilon=epsilon)

    return pmap(one, list(enumerate(_spawn(seed, count))))


def random_signal(rng: np.random.Generator, grid: TimeGrid, terms: int = 5) -> TimeSignal:
    """Random trigonometric signal whose minimum is attained after ``t_0``."""
    t = grid.nodes / grid.T
    while True:
        k = np.arange(1, terms + 1)
        ca, sa = rng.normal(size=terms) / k, rng.normal(size=terms) / k
        y = np.cos(np.pi * np.outer(t, k)) @ ca + np.sin(np.pi * np.outer(t, k)) @ sa
        if np.argmin(y) > 0:
            return TimeSignal(grid, y)


def extremum_suite(seed: int, count: int = 200, N: int = 1024, tol: float = 1e-6) -> list[CheckReport]:
    """Extremum probe on random smooth signals with an interior minimum."""

    def one(rng):
        alpha = float(rng.uniform(0.1, 0.95))
        grid = TimeGrid.uniform(1.0, N)
        return extremum_principle_probe(random_signal(rng, grid), alpha, tol)

    return pmap(one, _spawn(seed, count))


def coercivity_suite(
    seed: int, count: int = 20, n: int = 41, drift: float = 2.0, b0: float | str = "threshold", margin: float = 0.5
) -> list[tuple[float, float]]:
    """``coercivity_check`` of ``A1`` on random coefficient draws.

    Args:
        b0: ``"threshold"`` uses ``max|b|**2 / (4 min a) + margin`` per draw;
            a number fixes ``b0`` (``0`` disables the zeroth-order term).

    Returns:
        ``(b0 used, coercivity constant)`` per draw.
    """
    grid = SpaceGrid.interval(n)

    def one(rng):
        a0 = rng.uniform(0.5, 1.5)
        a1 = rng.uniform(0.0, 0.4) * a0
        bb, k = rng.uniform(0.5, 1.0) * drift, int(rng.integers(1, 4))
        sig = float(rng.uniform(0.0, 2.0))
        coeffs = CoefficientSet(
            a=lambda xx, t: a0 + a1 * np.cos(k * np.pi * xx[:, 0]),
            b=lambda xx, t: bb * np.sin(np.pi * xx[:, 0] + 0.3 * k),
            sigma=sig,
        )
        bmax = float(np.max(np.abs(coeffs.drift(grid.points, 0.0, 1))))
        b0_val = bmax**2 / (4.0 * (a0 - a1)) + margin if b0 == "threshold" else float(b0)
        op = assemble(coeffs.replace(b0=b0_val), grid, "A1", validate=b0_val > 0)
        return b0_val, coercivity_check(op, seed=int(rng.integers(2**31)))

    return pmap(one, _spawn(seed, count))


# }}}
