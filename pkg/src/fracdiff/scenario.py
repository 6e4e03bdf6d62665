"""Declarative scenario files: JSON describing one problem, its solvers and checks.

Schema (keys marked * are required)::

    {
      "name": "example1",
      "seed": 20240611,                 # 64-bit seed for randomised checks
      "alpha"*: 0.5,
      "grid"*: {"n": 41, "L": 1.0}  or  {"nx": 21, "ny": 21, "Lx": 1.0, "Ly": 1.0},
      "time"*: {"T": 1.0, "N": 128, "kind": "graded", "gamma": 4.0},
      "coefficients": {"a": fn, "b": fn, "c": fn, "c0": 0.0, "b0": fn, "sigma": fn},
      "initial": fn,
      "source": fn,
      "solvers": ["spectral", "l1"],
      "settings": {"m_modes": null, "tol": 1e-12, "max_sweeps": 200},
      "checks": [{"check": "positivity", "tol": 1e-8, ...}, ...],
      "output": {"dir": "out", "plots": true}
    }

A function ``fn`` of ``(x, t)`` is a number or an object with a ``kind``:

* ``constant``: ``value``;
* ``affine``: ``value + slope . x + rate * t`` (``slope`` a number or per-axis list);
* ``sinusoid``: ``offset + amplitude * sin(pi * (k . x) + phase)``;
* ``bump``: ``amplitude * prod_i sin(pi x_i / L_i)**2`` on the grid box;
* ``gaussian``: ``amplitude * exp(-|x - center|**2 / width**2)``;
* ``power``: ``scale * t**exponent``;
* ``table``: piecewise-linear interpolation of ``values`` at ``x`` (1D), given
  inline or as ``path`` (CSV with columns ``x`` and ``column``);
* ``sum`` / ``product``: over ``terms``.

``b`` in 2D is a list of two functions. ``kind`` and ``gamma`` of the time
grid default to a graded grid with ``gamma = 2/alpha``.
"""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, FracDiffError
from .fractional_calculus import TimeGrid
from .solvers import SOLVERS, ProblemSpec
from .spatial_operator import CoefficientSet, SpaceGrid

__all__ = [
    "CHECKS",
    "FUNCTION_KINDS",
    "Scenario",
    "build_function",
    "bundled",
    "load_scenario",
    "parse_scenario",
    "set_path",
]

CHECKS = ("positivity", "comparison", "c-mono", "sigma-mono", "example-bound", "barrier", "extremum")
FUNCTION_KINDS = (
    "constant", "affine", "sinusoid", "bump", "gaussian", "power", "table", "sum", "product",
)
_TOP_KEYS = {
    "name", "seed", "alpha", "grid", "time", "coefficients", "initial", "source",
    "solvers", "settings", "checks", "output",
}

Fn = Callable[[np.ndarray, float], np.ndarray]


# {{{ named functions


def _number(spec: dict, key: str, where: str, default: float | None = None) -> float:
    if key not in spec:
        if default is None:
            raise ConfigError(f"missing key {key!r}", field=where)
        return float(default)
    val = spec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key!r} must be a number, got {val!r}", field=f"{where}.{key}")
    return float(val)


def _vector(spec: dict, key: str, where: str, dim: int, default: float = 0.0) -> np.ndarray:
    val = spec.get(key, default)
    arr = np.atleast_1d(np.asarray(val, dtype=float)) if _numeric(val) else None
    if arr is None or arr.ndim != 1 or arr.size not in (1, dim):
        raise ConfigError(f"{key!r} must be a number or a list of {dim}", field=f"{where}.{key}")
    return np.broadcast_to(arr, (dim,)).copy()


def _numeric(val: Any) -> bool:
    if isinstance(val, bool):
        return False
    if isinstance(val, (int, float)):
        return True
    return isinstance(val, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)


def _read_table(path: Path, column: str, where: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read table: {exc}", field=where) from None
    if not rows or "x" not in rows[0] or column not in rows[0]:
        raise ConfigError(f"table needs columns 'x' and {column!r}", field=where)
    try:
        return np.array([float(r["x"]) for r in rows]), np.array([float(r[column]) for r in rows])
    except ValueError as exc:
        raise ConfigError(f"bad number in table: {exc}", field=where) from None


def build_function(spec: Any, where: str, dim: int = 1, lengths=(1.0,), base: Path | None = None) -> float | Fn:
    """Turn a function description into a float or a callable ``f(x, t)``.

    Args:
        spec: number or object with a ``kind`` (see module docstring).
        where: dotted location used in error messages.
        dim: spatial dimension.
        lengths: box lengths (for ``bump``).
        base: directory against which table paths are resolved.

    Raises:
        ConfigError: unknown kind, missing or malformed parameters.
    """
    if isinstance(spec, bool):
        raise ConfigError("expected a number or a function object", field=where)
    if isinstance(spec, (int, float)):
        return float(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("expected a number or an object with a 'kind'", field=where)
    kind = spec["kind"]
    if kind not in FUNCTION_KINDS:
        raise ConfigError(f"unknown function kind {kind!r}; expected one of {FUNCTION_KINDS}", field=f"{where}.kind")

    if kind == "constant":
        return _number(spec, "value", where)
    if kind == "affine":
        v0 = _number(spec, "value", where, 0.0)
        slope = _vector(spec, "slope", where, dim)
        rate = _number(spec, "rate", where, 0.0)
        return lambda x, t: v0 + x @ slope + rate * t
    if kind == "sinusoid":
        off = _number(spec, "offset", where, 0.0)
        amp = _number(spec, "amplitude", where, 1.0)
        k = _vector(spec, "k", where, dim, 1.0)
        ph = _number(spec, "phase", where, 0.0)
        return lambda x, t: off + amp * np.sin(np.pi * (x @ k) + ph)
    if kind == "bump":
        amp = _number(spec, "amplitude", where, 1.0)
        L = np.asarray(lengths, dtype=float)
        return lambda x, t: amp * np.prod(np.sin(np.pi * x / L) ** 2, axis=1)
    if kind == "gaussian":
        amp = _number(spec, "amplitude", where, 1.0)
        center = _vector(spec, "center", where, dim, 0.5)
        width = _number(spec, "width", where, 0.1)
        if not width > 0:
            raise ConfigError("width must be positive", field=f"{where}.width")
        return lambda x, t: amp * np.exp(-np.sum((x - center) ** 2, axis=1) / width**2)
    if kind == "power":
        scale = _number(spec, "scale", where, 1.0)
        expo = _number(spec, "exponent", where)
        if expo < 0:
            raise ConfigError("exponent must be non-negative", field=f"{where}.exponent")
        return lambda x, t: np.full(x.shape[0], scale * float(t) ** expo)
    if kind == "table":
        if dim != 1:
            raise ConfigError("tables are supported on 1D grids only", field=where)
        if "path" in spec:
            path = Path(spec["path"])
            if base is not None and not path.is_absolute():
                path = base / path
            xs, vs = _read_table(path, spec.get("column", "value"), where)
        else:
            if not (_numeric(spec.get("x")) and _numeric(spec.get("values"))):
                raise ConfigError("inline tables need numeric lists 'x' and 'values'", field=where)
            xs, vs = np.asarray(spec["x"], dtype=float), np.asarray(spec["values"], dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 2 or np.any(np.diff(xs) <= 0):
            raise ConfigError("table x must be increasing with one value per entry", field=where)
        return lambda x, t: np.interp(x[:, 0], xs, vs)
    # sum / product
    terms = spec.get("terms")
    if not isinstance(terms, list) or not terms:
        raise ConfigError("needs a non-empty list 'terms'", field=f"{where}.terms")
    parts = [build_function(s, f"{where}.terms[{i}]", dim, lengths, base) for i, s in enumerate(terms)]

    def combined(x, t):
        vals = [np.broadcast_to(p(x, t) if callable(p) else p, (x.shape[0],)) for p in parts]
        return np.sum(vals, axis=0) if kind == "sum" else np.prod(vals, axis=0)

    if all(not callable(p) for p in parts):
        return float(combined(np.zeros((1, dim)), 0.0)[0])
    return combined


def _sample(fn: float | Fn, pts: np.ndarray, t: float) -> np.ndarray:
    val = fn(pts, t) if callable(fn) else fn
    return np.array(np.broadcast_to(np.asarray(val, dtype=float), (pts.shape[0],)))


# }}}


# {{{ scenario


@dataclass(frozen=True, eq=False)
class Scenario:
    """A parsed scenario: the problem plus what to run on it.

    Attributes:
        name: label used for output files.
        raw: the JSON document the scenario was built from.
        problem: the assembled problem.
        seed: seed for randomised checks.
        solvers: solvers to run.
        settings: spectral solver settings.
        checks: check entries, each with a ``check`` key.
        output_dir: where ``run`` writes its files.
        plots: whether ``run`` renders PNGs.
        base: directory of the scenario file (for relative paths).
    """

    name: str
    raw: dict = field(repr=False)
    problem: ProblemSpec = field(repr=False)
    seed: int
    solvers: tuple[str, ...]
    settings: dict
    checks: tuple[dict, ...]
    output_dir: Path
    plots: bool
    base: Path

    def function(self, spec: Any, where: str) -> float | Fn:
        """Build a function on this scenario's grid."""
        g = self.problem.grid
        return build_function(spec, where, g.dim, g.lengths, self.base)

    def override(self, changes: dict) -> ProblemSpec:
        """Problem with some top-level problem keys (``initial``, ``source``, ``coefficients``) replaced."""
        raw = copy.deepcopy(self.raw)
        for key, val in changes.items():
            if key not in ("initial", "source", "coefficients"):
                raise ConfigError(f"cannot override {key!r}", field=key)
            if key == "coefficients":
                raw.setdefault("coefficients", {}).update(val)
            else:
                raw[key] = val
        return _problem(raw, self.base)


def _grid(spec: Any) -> SpaceGrid:
    if not isinstance(spec, dict):
        raise ConfigError("expected an object", field="grid")
    try:
        if "n" in spec:
            return SpaceGrid.interval(int(spec["n"]), _number(spec, "L", "grid", 1.0))
        if "nx" in spec and "ny" in spec:
            return SpaceGrid.rectangle(
                int(spec["nx"]), int(spec["ny"]), _number(spec, "Lx", "grid", 1.0), _number(spec, "Ly", "grid", 1.0)
            )
    except FracDiffError as exc:
        raise ConfigError(str(exc), field="grid") from None
    raise ConfigError("needs 'n' (1D) or 'nx' and 'ny' (2D)", field="grid")


def _tgrid(spec: Any, alpha: float) -> TimeGrid:
    if not isinstance(spec, dict) or "N" not in spec:
        raise ConfigError("needs an object with 'N'", field="time")
    T = _number(spec, "T", "time", 1.0)
    N = spec["N"]
    if isinstance(N, bool) or not isinstance(N, int):
        raise ConfigError("'N' must be an integer", field="time.N")
    kind = spec.get("kind", "graded")
    try:
        if kind == "uniform":
            return TimeGrid.uniform(T, N)
        if kind == "graded":
            return TimeGrid.graded(T, N, _number(spec, "gamma", "time", 2.0 / alpha))
    except FracDiffError as exc:
        raise ConfigError(str(exc), field="time") from None
    raise ConfigError(f"unknown kind {kind!r}; expected 'uniform' or 'graded'", field="time.kind")


def _problem(raw: dict, base: Path) -> ProblemSpec:
    alpha = _number(raw, "alpha", "")
    grid = _grid(raw.get("grid"))
    tgrid = _tgrid(raw.get("time"), alpha)
    dim, L = grid.dim, grid.lengths
    cspec = raw.get("coefficients", {})
    if not isinstance(cspec, dict):
        raise ConfigError("expected an object", field="coefficients")
    unknown = set(cspec) - {"a", "b", "c", "c0", "b0", "sigma"}
    if unknown:
        raise ConfigError(f"unknown coefficient(s) {sorted(unknown)}", field="coefficients")
    coeffs: dict[str, Any] = {}
    for key in ("a", "c", "b0", "sigma"):
        if key in cspec:
            coeffs[key] = build_function(cspec[key], f"coefficients.{key}", dim, L, base)
    if "c0" in cspec:
        coeffs["c0"] = _number(cspec, "c0", "coefficients")
    if "b" in cspec:
        bs = cspec["b"]
        if dim == 1:
            coeffs["b"] = build_function(bs, "coefficients.b", dim, L, base)
        else:
            if not isinstance(bs, list) or len(bs) != dim:
                raise ConfigError(f"2D drift needs a list of {dim} functions", field="coefficients.b")
            comps = [build_function(s, f"coefficients.b[{i}]", dim, L, base) for i, s in enumerate(bs)]
            coeffs["b"] = lambda x, t: np.stack([_sample(f, x, t) for f in comps], axis=1)
    try:
        cs = CoefficientSet(**coeffs)
        a_fn = build_function(raw.get("initial", 0.0), "initial", dim, L, base)
        f_fn = build_function(raw.get("source", 0.0), "source", dim, L, base)
        pts = grid.points
        a = _sample(a_fn, pts, 0.0)
        F = np.stack([_sample(f_fn, pts, t) for t in tgrid.nodes])
        return ProblemSpec(alpha, grid, tgrid, cs, a, F)
    except ConfigError:
        raise
    except FracDiffError as exc:
        raise ConfigError(str(exc), field="problem") from None


def parse_scenario(raw: Any, base: Path | str = ".") -> Scenario:
    """Validate a scenario document and build its problem.

    Raises:
        ConfigError: with the dotted path of the offending entry.
    """
    base = Path(base)
    if not isinstance(raw, dict):
        raise ConfigError("a scenario must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}")
    problem = _problem(raw, base)
    name = raw.get("name", "scenario")
    if not isinstance(name, str) or not name:
        raise ConfigError("must be a non-empty string", field="name")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("must be an integer in [0, 2**64)", field="seed")
    solvers = raw.get("solvers", ["spectral"])
    if not isinstance(solvers, list) or any(s not in SOLVERS for s in solvers):
        raise ConfigError(f"must be a list drawn from {SOLVERS}", field="solvers")
    settings = raw.get("settings", {})
    if not isinstance(settings, dict) or set(settings) - {"m_modes", "tol", "max_sweeps"}:
        raise ConfigError("allowed keys are m_modes, tol, max_sweeps", field="settings")
    checks = raw.get("checks", [])
    if not isinstance(checks, list):
        raise ConfigError("must be a list", field="checks")
    for i, chk in enumerate(checks):
        if not isinstance(chk, dict) or chk.get("check") not in CHECKS:
            raise ConfigError(f"each entry needs 'check' from {CHECKS}", field=f"checks[{i}]")
    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("expected an object", field="output")
    out_dir = Path(out.get("dir", f"{name}_out"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    return Scenario(
        name, raw, problem, seed, tuple(solvers), dict(settings), tuple(checks), out_dir,
        bool(out.get("plots", True)), base,
    )


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. ``"example1"``)."""
    return Path(__file__).parent / "scenarios" / f"{name}.json"


def load_scenario(path: Path | str) -> Scenario:
    """Read and parse a scenario file; JSON syntax errors report line and column.

    A bare name of a bundled scenario (``example1``) is accepted when no such
    file exists; its outputs are then placed relative to the working directory.
    """
    path = Path(path)
    base = path.parent
    if not path.exists() and path.suffix == "" and bundled(str(path)).exists():
        path, base = bundled(str(path)), Path(".")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}", field=str(path)) from None
    return parse_scenario(raw, base)


def set_path(raw: dict, path: str, value: Any) -> dict:
    """Copy of ``raw`` with the scalar at dotted ``path`` replaced.

    List entries are addressed by index (``checks.0.tol``).

    Raises:
        ConfigError: the path does not exist or does not end at a scalar.
    """
    out = copy.deepcopy(raw)
    node: Any = out
    keys = path.split(".")
    for depth, key in enumerate(keys):
        last = depth == len(keys) - 1
        if isinstance(node, list):
            if not key.isdigit() or int(key) >= len(node):
                raise ConfigError(f"unknown parameter path {path!r}", field=path)
            key = int(key)
        elif not isinstance(node, dict) or key not in node:
            raise ConfigError(f"unknown parameter path {path!r}", field=path)
        if last:
            if isinstance(node[key], (dict, list)):
                raise ConfigError(f"parameter path {path!r} does not address a scalar", field=path)
            node[key] = value
        else:
            node = node[key]
    return out


# }}}
