"""Finite-difference realisations of the elliptic operators with Robin closure.

The grid is vertex centred: nodes sit on the boundary, and the unknown at a
boundary node lives on a half cell. For ``-(a u')'`` this gives

* interior rows ``(-a_{i-1/2} u_{i-1} + (a_{i-1/2} + a_{i+1/2}) u_i - a_{i+1/2} u_{i+1}) / h**2``,
* boundary rows ``(2/h) (a_{1/2} (u_0 - u_1) / h + sigma_0 u_0)``,

which is what ghost-node elimination of the centred conormal condition
``-a u'(0) + sigma u(0) = 0`` produces when the ghost coefficient is mirrored.
Multiplying by the trapezoid weights ``W`` makes the principal part symmetric,
so ``W^(1/2) A0 W^(-1/2)`` is a symmetric matrix and the eigenvectors of ``A0``
are orthonormal in the discrete ``L2`` inner product ``(u, v) = u^T W v``.

Operator variants (``D`` diffusion with Robin closure, ``B`` first-order drift):

* ``A  = D - B - c``  (full operator at time ``t``),
* ``A0 = D + c0``     (self-adjoint part used for the eigenbasis),
* ``A1 = D - B + b0`` (operator with positive zeroth-order coefficient).

Two-dimensional tensor grids are supported for diagonal diffusion matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, EllipticityError, SingularSystemError

__all__ = [
    "CoefficientSet",
    "DiscreteOperator",
    "EigenSystem",
    "SpaceGrid",
    "assemble",
    "assemble_series",
    "boundary_flux",
    "coercivity_check",
    "eigendecompose",
    "gradient",
    "h1_gram",
    "robin_load",
    "solve_psi",
]

Coefficient = Union[float, Callable[[np.ndarray, float], np.ndarray]]

VARIANTS = ("A", "A0", "A1")


# {{{ grid


@dataclass(frozen=True, eq=False)
class SpaceGrid:
    """Uniform vertex-centred grid on ``[0, L]`` or ``[0, Lx] x [0, Ly]``.

    Unknowns are ordered x-major in 2D: ``k = ix * ny + iy``.
    """

    shape: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        shape = tuple(int(s) for s in np.atleast_1d(self.shape))
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        if len(shape) not in (1, 2) or len(shape) != len(lengths):
            raise DomainError("grids are 1D or 2D with one length per axis")
        if min(shape) < 3:
            raise DomainError("each axis needs at least 3 nodes")
        if min(lengths) <= 0 or not all(np.isfinite(lengths)):
            raise DomainError("domain lengths must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def interval(cls, n: int, L: float = 1.0) -> SpaceGrid:
        return cls((n,), (L,))

    @classmethod
    def rectangle(cls, nx: int, ny: int, Lx: float = 1.0, Ly: float = 1.0) -> SpaceGrid:
        return cls((nx, ny), (Lx, Ly))

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / (n - 1) for n, L in zip(self.shape, self.lengths))

    def axis(self, i: int = 0) -> np.ndarray:
        return np.linspace(0.0, self.lengths[i], self.shape[i])

    @property
    def x(self) -> np.ndarray:
        """1D node coordinates (first axis in 2D)."""
        return self.axis(0)

    @property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(size, dim)``."""
        axes = np.meshgrid(*[self.axis(i) for i in range(self.dim)], indexing="ij")
        return np.stack([g.ravel() for g in axes], axis=1)

    def axis_weights(self, i: int) -> np.ndarray:
        w = np.full(self.shape[i], self.h[i])
        w[0] = w[-1] = 0.5 * self.h[i]
        return w

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights defining the discrete L2 inner product."""
        w = self.axis_weights(0)
        for i in range(1, self.dim):
            w = np.outer(w, self.axis_weights(i)).ravel()
        return w

    @property
    def boundary(self) -> np.ndarray:
        """Boolean mask of boundary nodes."""
        mask = np.zeros(self.shape, dtype=bool)
        for i in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[i] = 0
            mask[tuple(idx)] = True
            idx[i] = -1
            mask[tuple(idx)] = True
        return mask.ravel()

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.weights * u * v))

    def same_as(self, other: SpaceGrid) -> bool:
        return self.shape == other.shape and self.lengths == other.lengths


# }}}


# {{{ coefficients


def _sample(fn: Coefficient, x: np.ndarray, t: float, shape=None) -> np.ndarray:
    n = x.shape[0]
    if callable(fn):
        val = np.asarray(fn(x, t), dtype=float)
    else:
        val = np.asarray(fn, dtype=float)
    target = (n,) if shape is None else (n, *shape)
    try:
        return np.array(np.broadcast_to(val, target), dtype=float)
    except ValueError:
        raise DomainError(f"coefficient sample of shape {val.shape} does not fit {target}") from None


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of the operator, each a float or a callable ``f(x, t)``.

    ``x`` has shape ``(n, dim)``. The diffusion ``a`` may return a scalar field
    (isotropic) or, in 2D, ``(n, 2)`` diagonal entries or ``(n, 2, 2)`` matrices
    with zero off-diagonal part; it is sampled at ``t = 0``. ``b`` returns
    ``(n,)`` in 1D and ``(n, 2)`` in 2D. ``sigma`` is sampled on boundary nodes.
    """

    a: Coefficient = 1.0
    b: Coefficient = 0.0
    c: Coefficient = 0.0
    c0: float = 0.0
    b0: Coefficient = 1.0
    sigma: Coefficient = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.c0) or self.c0 < 0:
            raise DomainError("c0 must be a finite non-negative shift")

    def replace(self, **changes) -> CoefficientSet:
        fields = {k: getattr(self, k) for k in ("a", "b", "c", "c0", "b0", "sigma")}
        fields.update(changes)
        return CoefficientSet(**fields)

    def diffusion(self, x: np.ndarray, dim: int) -> np.ndarray:
        """Diagonal diffusion entries, shape ``(n, dim)``."""
        raw = np.asarray(self.a(x, 0.0) if callable(self.a) else self.a, dtype=float)
        n = x.shape[0]
        if raw.ndim == 3 or (raw.ndim == 2 and raw.shape[-2:] == (dim, dim) and raw.shape[0] != n):
            mats = np.broadcast_to(raw, (n, dim, dim))
            if not np.allclose(mats, np.swapaxes(mats, 1, 2)):
                raise EllipticityError("diffusion matrix must be symmetric")
            if dim > 1 and np.any(mats[:, 0, 1] != 0.0):
                raise DomainError("2D grids support diagonal diffusion only")
            diag = np.stack([mats[:, i, i] for i in range(dim)], axis=1)
        elif raw.ndim == 2 and raw.shape == (n, dim):
            diag = raw.copy()
        else:
            diag = np.repeat(np.broadcast_to(raw, (n,))[:, None], dim, axis=1)
        if not np.all(np.isfinite(diag)):
            raise EllipticityError("diffusion samples must be finite")
        if np.min(diag) <= 0:
            raise EllipticityError(f"ellipticity violated: min diffusion {np.min(diag):.3g} <= 0")
        return diag

    def drift(self, x: np.ndarray, t: float, dim: int) -> np.ndarray:
        return _sample(self.b, x, t, (dim,) if dim > 1 else None).reshape(x.shape[0], dim)

    def reaction(self, x: np.ndarray, t: float) -> np.ndarray:
        return _sample(self.c, x, t)

    def zeroth(self, x: np.ndarray, t: float) -> np.ndarray:
        return _sample(self.b0, x, t)

    def robin(self, x: np.ndarray) -> np.ndarray:
        return _sample(self.sigma, x, 0.0)


# }}}


# {{{ operator


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse matrix of one operator variant at a fixed time."""

    matrix: sp.csr_matrix = field(repr=False)
    variant: str
    grid: SpaceGrid
    t: float
    symmetric: bool

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def banded(self) -> np.ndarray:
        """``(3, n)`` band storage for :func:`scipy.linalg.solve_banded` (1D only)."""
        if self.grid.dim != 1:
            raise DomainError("band storage is only available in 1D")
        m = self.matrix.tocsr()
        ab = np.zeros((3, m.shape[0]))
        ab[0, 1:] = m.diagonal(1)
        ab[1, :] = m.diagonal(0)
        ab[2, :-1] = m.diagonal(-1)
        return ab

    def symmetry_defect(self) -> float:
        wm = sp.diags(self.weights) @ self.matrix
        return float(abs(wm - wm.T).max()) if wm.nnz else 0.0


def _axis_lines(grid: SpaceGrid, axis: int) -> np.ndarray:
    """Index array of shape ``(lines, n_axis)`` listing nodes along ``axis``."""
    idx = np.arange(grid.size).reshape(grid.shape)
    return np.moveaxis(idx, axis, -1).reshape(-1, grid.shape[axis])


def _diffusion_matrix(grid: SpaceGrid, coeffs: CoefficientSet, sigma: np.ndarray) -> sp.csr_matrix:
    """``D``: divergence-form diffusion with homogeneous Robin rows."""
    pts = grid.points
    rows, cols, vals = [], [], []
    for axis in range(grid.dim):
        h = grid.h[axis]
        lines = _axis_lines(grid, axis)
        # midpoint coefficients along this axis
        mid = 0.5 * (pts[lines[:, :-1]] + pts[lines[:, 1:]])
        amid = coeffs.diffusion(mid.reshape(-1, grid.dim), grid.dim)[:, axis].reshape(lines.shape[0], -1)
        n = lines.shape[1]
        scale = np.full(n - 1, 1.0 / h**2)
        # boundary half cells: factor 2 from the half-width control volume
        left = np.concatenate([[2.0], np.ones(n - 2)])
        right = np.concatenate([np.ones(n - 2), [2.0]])
        lo_edge = amid * scale  # coupling of node i to i+1 (edge i+1/2)
        i, j = lines[:, :-1], lines[:, 1:]
        rows += [i.ravel(), j.ravel(), i.ravel(), j.ravel()]
        cols += [j.ravel(), i.ravel(), i.ravel(), j.ravel()]
        vals += [
            (-lo_edge * left[None, :]).ravel(),
            (-lo_edge * right[None, :]).ravel(),
            (lo_edge * left[None, :]).ravel(),
            (lo_edge * right[None, :]).ravel(),
        ]
        # Robin terms on the two faces normal to this axis
        for end in (0, -1):
            nodes = lines[:, end]
            rows.append(nodes)
            cols.append(nodes)
            vals.append(2.0 / h * sigma[nodes])
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(grid.size, grid.size)
    )
    return m.tocsr()


def gradient(grid: SpaceGrid, u: np.ndarray, coeffs: CoefficientSet | None = None, g: float = 0.0) -> np.ndarray:
    """Centred-difference gradient, shape ``(size, dim)``.

    Boundary derivatives normal to a face come from the Robin condition
    ``a du/dnu + sigma u = g``; with ``coeffs=None`` a homogeneous Neumann
    condition is assumed. Tangential derivatives on faces are centred.
    """
    u = np.asarray(u, dtype=float)
    pts = grid.points
    out = np.zeros((grid.size, grid.dim))
    if coeffs is not None:
        sig = coeffs.robin(pts)
        adiag = coeffs.diffusion(pts, grid.dim)
    for axis in range(grid.dim):
        h = grid.h[axis]
        lines = _axis_lines(grid, axis)
        vals = u[lines]
        d = np.empty_like(vals)
        d[:, 1:-1] = (vals[:, 2:] - vals[:, :-2]) / (2.0 * h)
        if coeffs is None:
            d[:, 0] = 0.0
            d[:, -1] = 0.0
        else:
            lo, hi = lines[:, 0], lines[:, -1]
            # outward normal is -e_axis at the low face, +e_axis at the high face
            d[:, 0] = (sig[lo] * vals[:, 0] - g) / adiag[lo, axis]
            d[:, -1] = (g - sig[hi] * vals[:, -1]) / adiag[hi, axis]
        out[lines.ravel(), axis] = d.ravel()
    return out


def _drift_matrix(grid: SpaceGrid, coeffs: CoefficientSet, t: float, sigma: np.ndarray) -> sp.csr_matrix:
    """``B u = b . grad u`` with the Robin-consistent boundary derivative."""
    pts = grid.points
    b = coeffs.drift(pts, t, grid.dim)
    if not np.any(b):
        return sp.csr_matrix((grid.size, grid.size))
    adiag = coeffs.diffusion(pts, grid.dim)
    rows, cols, vals = [], [], []
    for axis in range(grid.dim):
        h = grid.h[axis]
        lines = _axis_lines(grid, axis)
        inner = lines[:, 1:-1]
        bi = b[inner, axis]
        rows += [inner.ravel(), inner.ravel()]
        cols += [lines[:, 2:].ravel(), lines[:, :-2].ravel()]
        vals += [(bi / (2 * h)).ravel(), (-bi / (2 * h)).ravel()]
        lo, hi = lines[:, 0], lines[:, -1]
        rows += [lo, hi]
        cols += [lo, hi]
        vals += [b[lo, axis] * sigma[lo] / adiag[lo, axis], -b[hi, axis] * sigma[hi] / adiag[hi, axis]]
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(grid.size, grid.size)
    )
    return m.tocsr()


def _sigma_nodes(grid: SpaceGrid, coeffs: CoefficientSet, validate: bool) -> np.ndarray:
    sigma = np.zeros(grid.size)
    bnd = grid.boundary
    sigma[bnd] = coeffs.robin(grid.points[bnd])
    if validate and (np.any(sigma < 0) or not np.all(np.isfinite(sigma))):
        raise EllipticityError("Robin coefficient sigma must be finite and non-negative")
    return sigma


def assemble(
    coeffs: CoefficientSet, grid: SpaceGrid, variant: str = "A", t: float = 0.0, *, validate: bool = True
) -> DiscreteOperator:
    """Assemble ``A``, ``A0`` or ``A1`` at time ``t``.

    Args:
        coeffs: operator coefficients.
        grid: spatial grid.
        variant: ``"A"``, ``"A0"`` or ``"A1"``.
        t: time at which time-dependent coefficients are sampled.
        validate: set to False only to build deliberately invalid operators in tests.

    Raises:
        EllipticityError: non-positive diffusion, negative sigma, or ``b0 <= 0`` for A1.
    """
    if variant not in VARIANTS:
        raise DomainError(f"unknown operator variant {variant!r}")
    pts = grid.points
    sigma = _sigma_nodes(grid, coeffs, validate)
    D = _diffusion_matrix(grid, coeffs, sigma)
    eye = sp.identity(grid.size, format="csr")
    if variant == "A0":
        M = D + coeffs.c0 * eye
    else:
        B = _drift_matrix(grid, coeffs, t, sigma)
        if variant == "A":
            c = coeffs.reaction(pts, t)
            if not np.all(np.isfinite(c)):
                raise DomainError("reaction coefficient must be finite")
            M = D - B - sp.diags(c)
        else:
            b0 = coeffs.zeroth(pts, t)
            if validate and (np.any(b0 <= 0) or not np.all(np.isfinite(b0))):
                raise EllipticityError("A1 needs a positive zeroth-order coefficient b0")
            M = D - B + sp.diags(b0)
    return DiscreteOperator(M.tocsr(), variant, grid, float(t), variant == "A0")


def assemble_series(
    coeffs: CoefficientSet, grid: SpaceGrid, variant: str, ts, *, validate: bool = True
) -> list[DiscreteOperator]:
    """``assemble(coeffs, grid, variant, t)`` for every ``t`` in ``ts``.

    The diffusion part is built once and the drift part only when its samples
    change; the diagonal reaction (or ``b0``) term is patched in place. The
    result is entry-for-entry identical to calling :func:`assemble` per time.
    """
    if variant not in VARIANTS:
        raise DomainError(f"unknown operator variant {variant!r}")
    ts = [float(t) for t in np.atleast_1d(ts)]
    if variant == "A0":
        op = assemble(coeffs, grid, "A0", 0.0, validate=validate)
        return [DiscreteOperator(op.matrix, "A0", grid, t, True) for t in ts]
    pts = grid.points
    sigma = _sigma_nodes(grid, coeffs, validate)
    D = _diffusion_matrix(grid, coeffs, sigma)
    rows = np.arange(grid.size)
    out = []
    key = None
    for t in ts:
        b = coeffs.drift(pts, t, grid.dim)
        if key is None or not np.array_equal(b, key):
            key = b
            base = (D - _drift_matrix(grid, coeffs, t, sigma)).tocsr()
            base.sort_indices()
            pos = np.full(grid.size, -1)
            for r in rows:
                lo, hi = base.indptr[r], base.indptr[r + 1]
                hit = np.flatnonzero(base.indices[lo:hi] == r)
                if hit.size:
                    pos[r] = lo + hit[0]
        if variant == "A":
            d = -coeffs.reaction(pts, t)
            if not np.all(np.isfinite(d)):
                raise DomainError("reaction coefficient must be finite")
        else:
            d = coeffs.zeroth(pts, t)
            if validate and (np.any(d <= 0) or not np.all(np.isfinite(d))):
                raise EllipticityError("A1 needs a positive zeroth-order coefficient b0")
        if np.all(pos >= 0):
            M = base.copy()
            M.data[pos] += d
        else:
            M = (base + sp.diags(d)).tocsr()
        out.append(DiscreteOperator(M, variant, grid, t, False))
    return out


def robin_load(coeffs: CoefficientSet, grid: SpaceGrid, variant: str = "A1", t: float = 0.0, g: float = 1.0) -> np.ndarray:
    """Right-hand-side contribution of inhomogeneous Robin data ``g``.

    For boundary data ``a du/dnu + sigma u = g`` the discrete equation
    ``Op u = f`` becomes ``Op_hom u = f + robin_load``.
    """
    pts = grid.points
    load = np.zeros(grid.size)
    if variant == "A0":
        drift = np.zeros((grid.size, grid.dim))
        sign = 0.0
    else:
        drift = coeffs.drift(pts, t, grid.dim)
        sign = 1.0
    adiag = coeffs.diffusion(pts, grid.dim)
    for axis in range(grid.dim):
        h = grid.h[axis]
        lines = _axis_lines(grid, axis)
        lo, hi = lines[:, 0], lines[:, -1]
        load[lo] += 2.0 / h * g - sign * drift[lo, axis] * g / adiag[lo, axis]
        load[hi] += 2.0 / h * g + sign * drift[hi, axis] * g / adiag[hi, axis]
    return load


def boundary_flux(grid: SpaceGrid, coeffs: CoefficientSet, u: np.ndarray) -> np.ndarray:
    """``a du/dnu + sigma u`` on boundary nodes (second-order one-sided differences).

    Returned in the order of ``np.flatnonzero(grid.boundary)``; in 2D each
    boundary node reports the minimum over the faces it belongs to.
    """
    u = np.asarray(u, dtype=float)
    pts = grid.points
    sig = coeffs.robin(pts)
    adiag = coeffs.diffusion(pts, grid.dim)
    flux = np.full(grid.size, np.inf)
    for axis in range(grid.dim):
        h = grid.h[axis]
        lines = _axis_lines(grid, axis)
        v = u[lines]
        dlo = (-3.0 * v[:, 0] + 4.0 * v[:, 1] - v[:, 2]) / (2.0 * h)
        dhi = (3.0 * v[:, -1] - 4.0 * v[:, -2] + v[:, -3]) / (2.0 * h)
        lo, hi = lines[:, 0], lines[:, -1]
        flux[lo] = np.minimum(flux[lo], -adiag[lo, axis] * dlo + sig[lo] * u[lo])
        flux[hi] = np.minimum(flux[hi], adiag[hi, axis] * dhi + sig[hi] * u[hi])
    return flux[grid.boundary]


# }}}


# {{{ spectral decomposition


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Leading eigenpairs of ``A0``; eigenvectors are ``W``-orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return self.eigenvalues.size

    def project(self, u: np.ndarray) -> np.ndarray:
        """Coefficients ``(u, phi_n)`` along the last spatial axis of ``u``."""
        return (np.asarray(u) * self.weights) @ self.eigenvectors

    def synthesize(self, coef: np.ndarray) -> np.ndarray:
        return np.asarray(coef) @ self.eigenvectors.T


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(vecs), axis=0)
    first = np.argmax(np.abs(vecs) > 1e-10 * scale[None, :], axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs[None, :]


def eigendecompose(op: DiscreteOperator, m: int | None = None) -> EigenSystem:
    """First ``m`` eigenpairs of the symmetric variant ``A0`` (all if ``m`` is None)."""
    if op.variant != "A0":
        raise DomainError("eigendecompose needs the self-adjoint A0 variant")
    n = op.grid.size
    m = n if m is None else int(m)
    if not 1 <= m <= n:
        raise DomainError(f"requested {m} modes from an operator of size {n}")
    w = op.weights
    sw = np.sqrt(w)
    S = sp.diags(sw) @ op.matrix @ sp.diags(1.0 / sw)
    try:
        if op.grid.dim == 1:
            d = S.diagonal()
            e = 0.5 * (S.diagonal(1) + S.diagonal(-1))
            vals, vecs = sla.eigh_tridiagonal(d, e, select="i", select_range=(0, m - 1))
        else:
            dense = S.toarray()
            dense = 0.5 * (dense + dense.T)
            vals, vecs = sla.eigh(dense, subset_by_index=(0, m - 1))
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:  # pragma: no cover - LAPACK failure
        raise SingularSystemError(f"eigensolver failed: {exc}") from exc
    phi = _fix_signs(vecs / sw[:, None])
    vals = np.array(vals)
    phi = np.array(phi)
    vals.flags.writeable = False
    phi.flags.writeable = False
    return EigenSystem(vals, phi, w)


# }}}


# {{{ coercivity and the auxiliary problem


def h1_gram(grid: SpaceGrid) -> sp.csr_matrix:
    """Gram matrix of the discrete H1 norm: weighted L2 plus forward difference quotients."""
    G = sp.diags(grid.weights)
    for axis in range(grid.dim):
        h = grid.h[axis]
        lines = _axis_lines(grid, axis)
        n_edges = lines[:, :-1].size
        r = np.arange(n_edges)
        K = sp.coo_matrix(
            (
                np.concatenate([np.full(n_edges, -1.0 / h), np.full(n_edges, 1.0 / h)]),
                (np.concatenate([r, r]), np.concatenate([lines[:, :-1].ravel(), lines[:, 1:].ravel()])),
            ),
            shape=(n_edges, grid.size),
        ).tocsr()
        # each edge carries length h along the axis and the transverse node weight
        tw = np.ones(lines.shape[0])
        if grid.dim > 1:
            tw = grid.axis_weights(1 - axis)
        ew = np.repeat(tw, lines.shape[1] - 1) * h
        G = G + K.T @ sp.diags(ew) @ K
    return G.tocsr()


def coercivity_check(op: DiscreteOperator, probes: int = 16, seed: int = 0) -> float:
    """Estimate ``min (A1 v, v) / ||v||_H1**2`` over eigen-candidates and random probes.

    The candidates are generalized eigenvectors of the symmetric part of
    ``W A1`` against the H1 Gram matrix, so the estimate is the exact discrete
    minimum up to rounding; random probes are added as an independent check.
    A positive value certifies discrete coercivity.
    """
    grid = op.grid
    WA = (sp.diags(op.weights) @ op.matrix).toarray()
    S = 0.5 * (WA + WA.T)
    G = h1_gram(grid).toarray()
    vals, vecs = sla.eigh(S, G)
    cands = [vecs[:, 0], np.ones(grid.size)]
    rng = np.random.default_rng(seed)
    cands += list(rng.standard_normal((probes, grid.size)))
    best = float(vals[0])
    for v in cands:
        best = min(best, float(v @ S @ v) / float(v @ G @ v))
    return best


def solve_psi(coeffs: CoefficientSet, grid: SpaceGrid, t: float = 0.0, g: float = 1.0) -> np.ndarray:
    """Solve ``A1 psi = 1`` with Robin data ``a dpsi/dnu + sigma psi = g``.

    Raises:
        SingularSystemError: the system is singular or numerically so.
    """
    op = assemble(coeffs, grid, "A1", t)
    rhs = np.ones(grid.size) + robin_load(coeffs, grid, "A1", t, g)
    A = op.matrix.tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystemError(f"A1 is singular at t={t}", condition=np.inf) from exc
    psi = lu.solve(rhs)
    inv = spla.LinearOperator(A.shape, matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"))
    cond = spla.onenormest(A) * spla.onenormest(inv)
    if not np.all(np.isfinite(psi)) or cond > 1e14:
        raise SingularSystemError(f"A1 is ill-conditioned at t={t}", condition=float(cond))
    return psi


# }}}
