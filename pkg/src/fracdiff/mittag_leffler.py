"""Two-parameter Mittag-Leffler function on the real line and derived kernels.

``E_{a,b}(z) = sum_k z**k / Gamma(a*k + b)`` is evaluated with three branches:

* Taylor series (compensated summation) for ``z >= 0`` and for small negative
  ``z`` where the alternating terms do not cancel catastrophically;
* the algebraic asymptotic expansion ``-sum_k z**-k / Gamma(b - a*k)`` for
  ``z <= asymptotic_threshold``, accepted only where its smallest term shows the
  truncation error is below double precision;
* the collapsed Hankel-contour integral in between, rewritten in an angle
  variable so that the Cauchy-type peak of the integrand is flattened, and
  integrated with a fixed tanh-sinh rule.

All entry points accept scalars or arrays and are pure functions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, rgamma

from .errors import DomainError, MLOverflowError, OrderingError

__all__ = [
    "ASYMPTOTIC_THRESHOLD",
    "KernelWeight",
    "MLParams",
    "SERIES_RADIUS",
    "decay_bound_constant",
    "k_kernel",
    "k_segment",
    "kernel_antiderivatives",
    "mittag_leffler",
    "ml",
    "relaxation",
]

SERIES_RADIUS = 5.0
ASYMPTOTIC_THRESHOLD = -15.0
OVERFLOW_CAP = 50.0
# Negative-argument series is used only while |z|**(1/alpha) stays below this;
# beyond it the largest term exceeds the result by more than ~e**2.
SERIES_GROWTH_CAP = 2.0

_LOG_MAX = np.log(np.finfo(float).max)
_CHUNK = 4096


@dataclass(frozen=True)
class MLParams:
    """Orders of ``E_{alpha,beta}``; validated on construction."""

    alpha: float
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0) or not np.isfinite(self.alpha):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not (self.beta > 0.0) or not np.isfinite(self.beta):
            raise DomainError(f"beta must be positive, got {self.beta!r}")


@dataclass(frozen=True)
class KernelWeight:
    """Exact integral of ``t**(alpha-1) E_{alpha,alpha}(-lam t**alpha)`` over ``[t_lo, t_hi]``."""

    lam: float
    t_lo: float
    t_hi: float
    value: float


# {{{ tanh-sinh rule on (0, 1)


def _tanh_sinh(h: float = 1.0 / 32.0, tmax: float = 4.5) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes, complements ``1 - node`` and weights of the tanh-sinh rule on (0, 1)."""
    t = np.arange(-tmax, tmax + 0.5 * h, h)
    u = 0.5 * np.pi * np.sinh(t)
    # expit keeps full relative accuracy for nodes clustered at either end
    nodes = expit(2.0 * u)
    compl = expit(-2.0 * u)
    weights = 0.25 * h * np.pi * np.cosh(t) / np.cosh(u) ** 2
    keep = (nodes > 0.0) & (compl > 0.0)
    return nodes[keep], compl[keep], weights[keep]


_TS_NODES, _TS_COMPL, _TS_WEIGHTS = _tanh_sinh()

# }}}


# {{{ branches


def _neumaier(total: np.ndarray, comp: np.ndarray, term: np.ndarray) -> np.ndarray:
    """One compensated-summation step; updates ``comp`` in place, returns the new total."""
    t = total + term
    comp += np.where(np.abs(total) >= np.abs(term), (total - t) + term, (term - t) + total)
    return t


def _series(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """Taylor series with Neumaier-compensated summation."""
    z = np.asarray(z, dtype=float)
    order = np.argsort(np.abs(z), kind="stable")
    zs = z[order]
    absz = np.abs(zs)
    sign = np.where(zs < 0, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        logz = np.log(absz)
    # past this index the terms decrease monotonically
    k_peak = (absz ** (1.0 / alpha) - beta) / alpha

    total = np.full(zs.shape, float(rgamma(beta)))
    comp = np.zeros(zs.shape)
    # sorted by |z|, so the still-converging entries form a suffix
    start = int(np.searchsorted(absz, 0.0, side="right"))
    k = 0
    while start < zs.size:
        k += 1
        sl = slice(start, None)
        logterm = k * logz[sl] - gammaln(alpha * k + beta)
        if logterm[-1] > _LOG_MAX:
            raise MLOverflowError("Mittag-Leffler series term overflows double precision")
        term = np.exp(logterm)
        if k % 2 == 1:
            term *= sign[sl]
        # an overflowing sum is caught by the finiteness check below
        with np.errstate(over="ignore", invalid="ignore"):
            total[sl] = _neumaier(total[sl], comp[sl], term)
        done = (np.abs(term) <= 1e-18 * np.abs(total[sl])) & (k > k_peak[sl])
        start += done.size if done.all() else int(np.argmin(done))

    out = np.empty_like(zs)
    out[order] = total + comp
    if not np.all(np.isfinite(out)):
        raise MLOverflowError("Mittag-Leffler value exceeds double precision")
    return out


def _asymptotic(alpha: float, beta: float, z: np.ndarray, max_terms: int = 400) -> tuple[np.ndarray, np.ndarray]:
    """Algebraic expansion for ``z < 0``; returns (value, error estimate).

    The expansion is truncated before its smallest term, whose magnitude
    (estimated by ``Gamma(alpha*k + 1 - beta) / (pi |z|**k)``) is returned as
    the error estimate. Summation stops early once a term drops below
    ``1e-18`` of the leading term.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        v, e = _asymptotic(alpha, beta, z.ravel(), max_terms)
        return v.reshape(z.shape), e.reshape(z.shape)
    if z.size > _CHUNK:
        parts = [_asymptotic(alpha, beta, z[i : i + _CHUNK], max_terms) for i in range(0, z.size, _CHUNK)]
        return np.concatenate([v for v, _ in parts]), np.concatenate([e for _, e in parts])
    logx = np.log(-z)
    k = np.arange(1, max_terms + 1)
    arg = alpha * k + 1.0 - beta
    bounded = arg > 0  # the reflection bound only applies once Gamma's argument is positive
    coef = np.where(k % 2 == 1, 1.0, -1.0) * rgamma(beta - alpha * k)
    lead = int(np.argmax(coef != 0)) if np.any(coef != 0) else 0
    log_lead = np.log(abs(coef[lead])) - (lead + 1) * logx if coef[lead] != 0 else np.full(z.shape, -np.inf)

    n_terms = np.full(z.shape, max_terms)
    err = np.full(z.shape, np.inf)
    todo = np.arange(z.size)
    prev = np.full(z.shape, np.inf)
    log_tiny = log_lead + np.log(1e-18)
    k0, block = 0, 12
    while todo.size and k0 < max_terms:
        sl = slice(k0, min(k0 + block, max_terms))
        kk, bnd = k[sl], bounded[sl]
        g = np.where(bnd, gammaln(np.where(bnd, arg[sl], 1.0)), np.inf) - np.log(np.pi)
        est = g[None, :] - logx[todo, None] * kk[None, :]
        before = np.concatenate([prev[todo, None], est[:, :-1]], axis=1)
        grew = np.isfinite(est) & np.isfinite(before) & (est >= before)
        tiny = est <= log_tiny[todo, None]
        event = grew | tiny
        hit = event.any(axis=1)
        first = np.argmax(event, axis=1)[hit]
        rows = todo[hit]
        is_tiny = tiny[hit, first]
        # a tiny term is included; a growing term is not
        n_terms[rows] = np.where(is_tiny, kk[first], kk[first] - 1)
        err[rows] = np.exp(np.where(is_tiny, est[hit, first], before[hit, first]))
        prev[todo] = est[:, -1]
        todo = todo[~hit]
        k0 = sl.stop
        block *= 2

    # Horner in y = 1/x with per-entry truncation
    # rows sorted by term count, so the rows still needing term j form a prefix
    order = np.argsort(-n_terms, kind="stable")
    n_sorted = n_terms[order]
    y = np.exp(-logx[order])
    acc = np.zeros(z.shape)
    for j in range(int(n_sorted[0]) - 1 if n_sorted.size else -1, -1, -1):
        m = int(np.searchsorted(-n_sorted, -j, side="left"))  # count with n_terms > j
        acc[:m] = acc[:m] * y[:m] + coef[j]
    out = np.empty(z.shape)
    out[order] = acc * y
    return out, err


def _integral(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """Collapsed Hankel-contour integral for ``z < 0`` and ``alpha < 1``.

    With ``x = -z`` and ``v(phi) = x sin(phi) / sin(alpha*pi - phi)``,

        E_{a,b}(-x) = 1/(a*pi*x*sin(a*pi)) * int_0^{a*pi} exp(-v**(1/a)) v**((1-b)/a)
                      * (v sin(pi(1-b)) + x sin(pi(1+a-b))) dphi,

    valid for ``b < 1 + a``. The integrand is singular at ``phi = 0`` once
    ``b > 1``, so such ``b`` are first reduced to ``(0, 1]`` with
    ``E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z``.
    """
    z = np.asarray(z, dtype=float)
    if beta > 1.0:
        return (_integral(alpha, beta - alpha, z) - rgamma(beta - alpha)) / z

    if z.size > _CHUNK:
        return np.concatenate([_integral(alpha, beta, z[i : i + _CHUNK]) for i in range(0, z.size, _CHUNK)])
    x = -z[:, None]
    api = alpha * np.pi
    # split where v = 1 so the exp(-v**(1/a)) shoulder sits at a node cluster,
    # and stop where exp(-v**(1/a)) < 1e-30
    v_cut = 69.0**alpha
    split = np.arctan2(np.sin(api), x + np.cos(api))
    cut = np.arctan2(v_cut * np.sin(api), x + v_cut * np.cos(api))
    total = np.zeros(z.shape)
    s1 = np.sin(np.pi * (1.0 - beta))
    s2 = np.sin(np.pi * (1.0 + alpha - beta))
    for lo, hi in ((np.zeros_like(split), split), (split, cut)):
        phi = lo + (hi - lo) * _TS_NODES[None, :]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
            v = x * np.sin(phi) / np.sin(api - phi)
            f = np.exp(-(v ** (1.0 / alpha)) + ((1.0 - beta) / alpha) * np.log(v)) * (v * s1 + x * s2)
        f = np.where(np.isfinite(f), f, 0.0)
        total += (f * _TS_WEIGHTS[None, :]).sum(axis=1) * (hi - lo)[:, 0]
    return total / (api * (-z) * np.sin(api))


def _integral_alpha_one(beta: float, z: np.ndarray) -> np.ndarray:
    """``E_{1,b}(z)`` for ``b != 1`` from ``(1/Gamma(b-1)) int_0^1 e^{zs} (1-s)^{b-2} ds``."""
    z = np.asarray(z, dtype=float)
    if beta < 1.0:
        return rgamma(beta) + z * _integral_alpha_one(beta + 1.0, z)
    if beta == 1.0:
        return np.exp(z)
    s = _TS_NODES[None, :]
    f = np.exp(z[:, None] * s + (beta - 2.0) * np.log(_TS_COMPL[None, :]))
    return (f * _TS_WEIGHTS[None, :]).sum(axis=1) * rgamma(beta - 1.0)


# {{{ Chebyshev tables for the middle band

_PANEL_RATIO = np.sqrt(2.0)
_PANEL_NODES = 20
_PANEL_START = 2.0
_CHEB_X = np.cos(np.pi * (np.arange(_PANEL_NODES) + 0.5) / _PANEL_NODES)


@functools.lru_cache(maxsize=64)
def _band_table(alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise Chebyshev interpolant of ``s -> E_{a,b}(-s**a)``.

    Panels are ``[s0 q**j, s0 q**(j+1)]`` with ``q = sqrt(2)``; the function is
    bounded and analytic in a right half-plane neighbourhood of each panel, so
    20 nodes reach double precision. Built once per ``(alpha, beta)`` from the
    contour integral.
    """
    s_hi = max(np.exp(np.log(-ASYMPTOTIC_THRESHOLD) / alpha), 64.0)
    count = int(np.ceil(np.log(s_hi / _PANEL_START) / np.log(_PANEL_RATIO))) + 1
    edges = _PANEL_START * _PANEL_RATIO ** np.arange(count + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _CHEB_X[None, :]
    vals = _integral(alpha, beta, -(s.ravel() ** alpha)).reshape(s.shape)
    # discrete cosine transform gives the Chebyshev coefficients
    k = np.arange(_PANEL_NODES)
    basis = np.cos(np.outer(k, np.pi * (k + 0.5) / _PANEL_NODES))
    coef = (2.0 / _PANEL_NODES) * vals @ basis.T
    coef[:, 0] *= 0.5
    edges.flags.writeable = False
    coef.flags.writeable = False
    return edges, coef


def _band(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """Middle-band evaluation: table lookup where covered, contour integral otherwise."""
    edges, coef = _band_table(alpha, beta)
    with np.errstate(over="ignore"):
        s = (-z) ** (1.0 / alpha)
    inside = (s >= edges[0]) & (s <= edges[-1])
    out = np.empty_like(z)
    if np.any(~inside):
        out[~inside] = _integral(alpha, beta, z[~inside])
    if np.any(inside):
        si = s[inside]
        j = np.clip(np.floor(np.log(si / edges[0]) / np.log(_PANEL_RATIO)).astype(int), 0, len(edges) - 2)
        lo, hi = edges[j], edges[j + 1]
        u = (2.0 * si - lo - hi) / (hi - lo)
        b1 = np.zeros_like(u)
        b2 = np.zeros_like(u)
        for k in range(_PANEL_NODES - 1, 0, -1):
            b1, b2 = 2.0 * u * b1 - b2 + coef[j, k], b1
        out[inside] = u * b1 - b2 + coef[j, 0]
    return out


# }}}


def ml(
    p: MLParams,
    z,
    *,
    series_radius: float = SERIES_RADIUS,
    asymptotic_threshold: float = ASYMPTOTIC_THRESHOLD,
    cap: float = OVERFLOW_CAP,
):
    """Evaluate ``E_{alpha,beta}(z)`` for real ``z``.

    Args:
        p: validated orders.
        z: real scalar or array, ``z <= cap``.
        series_radius: largest ``|z|`` handled by the Taylor series for ``z < 0``.
        asymptotic_threshold: the asymptotic expansion is tried for ``z`` below this.
        cap: arguments above this raise :class:`MLOverflowError`.

    Returns:
        A float for scalar input, otherwise an array of the same shape.
    """
    if not isinstance(p, MLParams):
        raise DomainError("ml expects an MLParams instance")
    alpha, beta = float(p.alpha), float(p.beta)
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zf = np.atleast_1d(zarr).ravel()
    if not np.all(np.isfinite(zf)):
        raise DomainError("Mittag-Leffler argument must be finite")
    if np.any(zf > cap):
        raise MLOverflowError(f"argument exceeds overflow cap {cap}")

    out = np.empty(zf.shape)
    if alpha == 1.0 and beta == 1.0:
        if np.any(zf > _LOG_MAX):
            raise MLOverflowError("exp overflow")
        out[:] = np.exp(zf)
    else:
        absz = np.abs(zf)
        use_series = (zf >= 0) | ((absz <= series_radius) & (absz ** (1.0 / alpha) <= SERIES_GROWTH_CAP))
        if np.any(use_series):
            out[use_series] = _series(alpha, beta, zf[use_series])
        rest = ~use_series
        try_asym = rest & (zf <= asymptotic_threshold)
        if np.any(try_asym):
            val, err = _asymptotic(alpha, beta, zf[try_asym])
            ok = err <= 1e-15 * np.abs(val)
            idx = np.flatnonzero(try_asym)
            out[idx[ok]] = val[ok]
            rest[idx[ok]] = False
        if np.any(rest):
            if alpha == 1.0:
                out[rest] = _integral_alpha_one(beta, zf[rest])
            else:
                out[rest] = _band(alpha, beta, zf[rest])

    out = out.reshape(zarr.shape) if not scalar else out
    return float(out[0]) if scalar else out


def mittag_leffler(z, alpha: float, beta: float = 1.0):
    """Convenience wrapper: ``ml(MLParams(alpha, beta), z)``."""
    return ml(MLParams(alpha, beta), z)


def _check_nonneg(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be finite and non-negative")
    return arr


def relaxation(alpha: float, lam: float, t):
    """Relaxation profile ``E_{alpha,1}(-lam t**alpha)`` for ``lam, t >= 0``."""
    _check_nonneg("lambda", lam)
    tt = _check_nonneg("t", t)
    return ml(MLParams(alpha, 1.0), -lam * tt**alpha)


def k_kernel(alpha: float, lam: float, t):
    """Weakly singular kernel ``t**(alpha-1) E_{alpha,alpha}(-lam t**alpha)`` for ``t > 0``."""
    _check_nonneg("lambda", lam)
    tt = _check_nonneg("t", t)
    if np.any(tt == 0):
        raise DomainError("k_kernel is singular at t = 0; integrate with k_segment")
    val = tt ** (alpha - 1.0) * ml(MLParams(alpha, alpha), -lam * tt**alpha)
    return float(val) if np.ndim(val) == 0 else val


def kernel_antiderivatives(alpha: float, lam: float, x) -> tuple[np.ndarray, np.ndarray]:
    """First and second antiderivatives of ``k_kernel`` vanishing at 0.

    Returns ``(P1, P2)`` with ``P1(x) = x**alpha E_{alpha,alpha+1}(-lam x**alpha)``
    and ``P2(x) = x**(alpha+1) E_{alpha,alpha+2}(-lam x**alpha)``.
    """
    x = np.asarray(x, dtype=float)
    xa = x**alpha
    p1 = xa * ml(MLParams(alpha, alpha + 1.0), -lam * xa)
    p2 = xa * x * ml(MLParams(alpha, alpha + 2.0), -lam * xa)
    return p1, p2


def k_segment(alpha: float, lam: float, t_lo: float, t_hi: float) -> KernelWeight:
    """Exact integral of :func:`k_kernel` over ``[t_lo, t_hi]``.

    Mathematically ``(E(-lam t_lo**alpha) - E(-lam t_hi**alpha)) / lam``; it is
    computed from the antiderivative ``x**alpha E_{alpha,alpha+1}(-lam x**alpha)``
    which has no ``1/lam`` cancellation and covers ``lam = 0``.
    """
    MLParams(alpha, alpha)
    _check_nonneg("lambda", lam)
    _check_nonneg("t_lo", t_lo)
    if t_hi < t_lo:
        raise OrderingError(f"t_hi={t_hi} < t_lo={t_lo}")
    if t_hi == t_lo:
        return KernelWeight(float(lam), float(t_lo), float(t_hi), 0.0)
    p1, _ = kernel_antiderivatives(alpha, lam, np.array([t_lo, t_hi]))
    return KernelWeight(float(lam), float(t_lo), float(t_hi), float(p1[1] - p1[0]))


def decay_bound_constant(alpha: float, lams, ts) -> float:
    """Smallest ``C`` with ``max(E_{a,1}, E_{a,a})(-lam t**a) <= C / (1 + lam t**a)`` on the samples."""
    lams = np.asarray(lams, dtype=float)[:, None]
    ts = np.asarray(ts, dtype=float)[None, :]
    z = (lams * ts**alpha).ravel()
    e1 = np.abs(ml(MLParams(alpha, 1.0), -z))
    ea = np.abs(ml(MLParams(alpha, alpha), -z))
    return float(np.max(np.maximum(e1, ea) * (1.0 + z)))
