"""Command-line front end: ``fracdiff {run,solve,check,sweep,ml,frac-op}``.

Exit status: 0 when every check passes, 2 when a check fails, 1 on
configuration, solver or precondition errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import comparison as cmp
from ._parallel import pmap
from .errors import ConfigError, FracDiffError, PreconditionError
from .fractional_calculus import TimeGrid, TimeSignal, caputo_l1, rl_integral
from .io import read_signal_csv, write_field_csv, write_json, write_table_csv
from .mittag_leffler import MLParams, ml
from .scenario import CHECKS, Scenario, load_scenario, parse_scenario, set_path
from .solvers import Field, ProblemSpec, solve

__all__ = ["EXIT_CHECK_FAILED", "EXIT_ERROR", "EXIT_OK", "main", "run_checks", "run_scenario"]

EXIT_OK, EXIT_ERROR, EXIT_CHECK_FAILED = 0, 1, 2


# {{{ scenario execution


class _Fields:
    """Solutions of one problem, computed on first use."""

    def __init__(self, scn: Scenario):
        self.scn = scn
        self._cache: dict[str, Field] = {}

    def get(self, solver: str) -> Field:
        if solver not in self._cache:
            self._cache[solver] = self.solve(self.scn.problem, solver)
        return self._cache[solver]

    def solve(self, p: ProblemSpec, solver: str) -> Field:
        settings = self.scn.settings if solver == "spectral" else {}
        return solve(p, solver, **settings)


def _aggregate(name: str, reports: list[cmp.CheckReport]) -> cmp.CheckReport:
    """One report for a suite: the worst instance, passing iff all instances pass."""
    worst = min(reports, key=lambda r: r.worst_violation)
    details = dict(worst.details)
    details.update({"instances": len(reports), "failed": sum(not r.passed for r in reports)})
    return cmp.CheckReport(
        name, all(r.passed for r in reports), worst.worst_violation, worst.witness, worst.tolerance,
        worst.fingerprint, all(r.in_hypothesis for r in reports), details,
    )


def _require_nonneg(p: ProblemSpec, what: str) -> None:
    if np.any(p.a < 0) or np.any(p.F < 0):
        raise PreconditionError(f"{what} needs a >= 0 and F >= 0 at every node")


def _run_check(scn: Scenario, fields: _Fields, entry: dict, index: int) -> cmp.CheckReport:
    name = entry["check"]
    where = f"checks[{index}]"
    p = scn.problem
    tol = entry.get("tol")
    default_solver = "l1" if name == "barrier" else (scn.solvers[0] if scn.solvers else "spectral")
    solver = entry.get("solver", default_solver)
    if solver not in ("spectral", "l1"):
        raise ConfigError(f"unknown solver {solver!r}", field=f"{where}.solver")

    if name == "positivity":
        suite = entry.get("suite")
        if suite is not None:
            if not isinstance(suite, dict):
                raise ConfigError("expected an object", field=f"{where}.suite")
            opts = {k: suite[k] for k in ("n", "N", "drift", "reaction") if k in suite}
            reports = cmp.positivity_suite(
                scn.seed, int(suite.get("count", 10)), solvers=(solver,), alpha=p.alpha, **opts
            )
            if tol is not None:
                reports = [cmp.CheckReport(r.check_name, r.worst_violation >= -tol, r.worst_violation, r.witness,
                                           float(tol), r.fingerprint, r.in_hypothesis, r.details) for r in reports]
            return _aggregate("positivity", reports)
        _require_nonneg(p, "positivity")
        return cmp.check_positivity(fields.get(solver), tol)
    if name == "comparison":
        against = entry.get("against")
        if not isinstance(against, dict) or set(against) - {"initial", "source"} or not against:
            raise ConfigError("needs 'against' overriding 'initial' and/or 'source'", field=f"{where}.against")
        p2 = scn.override(against)
        if np.any(p.a < p2.a) or np.any(p.F < p2.F):
            raise PreconditionError("comparison needs the scenario data to dominate the 'against' data")
        return cmp.check_comparison(fields.get(solver), fields.solve(p2, solver), tol)
    if name == "c-mono":
        c1 = scn.function(entry.get("c1", p.coeffs.c), f"{where}.c1")
        if "c2" not in entry:
            raise ConfigError("missing key 'c2'", field=where)
        c2 = scn.function(entry["c2"], f"{where}.c2")
        return cmp.check_c_monotonicity(p, c1, c2, tol, solver, scn.settings)
    if name == "sigma-mono":
        for key in ("sigma2", "sigma0"):
            if key not in entry:
                raise ConfigError(f"missing key {key!r}", field=where)
        s1 = scn.function(entry.get("sigma1", p.coeffs.sigma), f"{where}.sigma1")
        s2 = scn.function(entry["sigma2"], f"{where}.sigma2")
        return cmp.check_sigma_monotonicity(
            p, s1, s2, float(entry["sigma0"]), tol, solver, scn.settings,
            out_of_hypothesis=bool(entry.get("out_of_hypothesis", False)),
        )
    if name == "example-bound":
        if "delta" not in entry:
            raise ConfigError("missing key 'delta'", field=where)
        u = fields.get(solver)
        return cmp.check_example_bound(p, float(entry["delta"]), float(entry.get("beta", 0.0)), tol, solver, u=u)
    if name == "barrier":
        pa = cmp.a1_form(p)
        u = fields.solve(pa, solver)
        return cmp.barrier_certificate(u, pa, tol=tol, epsilon=float(entry.get("epsilon", 1e-3)))
    # extremum
    if "signal" not in entry:
        raise ConfigError("missing key 'signal'", field=where)
    fn = scn.function(entry["signal"], f"{where}.signal")
    ts = p.tgrid.nodes
    zero = np.zeros((1, p.grid.dim))
    vals = np.array([float(np.ravel(fn(zero, t) if callable(fn) else fn)[0]) for t in ts])
    return cmp.extremum_principle_probe(TimeSignal(p.tgrid, vals), p.alpha, 1e-6 if tol is None else tol)


def run_checks(scn: Scenario, names: Sequence[str] | None = None, fields: _Fields | None = None) -> list[dict]:
    """Run the scenario's checks (optionally only those named) in declared order.

    A name with no entry in the scenario runs once with default parameters.
    """
    fields = fields or _Fields(scn)
    entries = [(i, c) for i, c in enumerate(scn.checks) if names is None or c["check"] in names]
    for name in names or ():
        if not any(c["check"] == name for _, c in entries):
            entries.append((len(scn.checks), {"check": name}))
    return [_run_check(scn, fields, c, i).to_dict() for i, c in entries]


def _solver_sidecar(u: Field) -> dict:
    return {
        "fingerprint": u.fingerprint,
        "iteration_report": list(u.iteration_report),
        "tolerance": cmp.TOLERANCES[u.producer],
        "warnings": list(u.warnings),
    }


def run_scenario(scn: Scenario, out_dir: Path | None = None, plots: bool | None = None) -> tuple[int, dict]:
    """Solve with every listed solver, run the checks, write outputs.

    Writes ``u_<solver>.csv`` (plus ``u_<solver>.png`` when plotting) and
    ``report.json`` into ``out_dir``.

    Returns:
        ``(exit status, report document)``.
    """
    out_dir = Path(out_dir or scn.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plots = scn.plots if plots is None else plots
    fields = _Fields(scn)
    solvers = {}
    for s in scn.solvers:
        u = fields.get(s)
        write_field_csv(out_dir / f"u_{s}.csv", u)
        solvers[s] = _solver_sidecar(u)
        if plots:
            from .plotting import plot_field

            plot_field(u, out_dir / f"u_{s}.png", f"{scn.name} ({s})")
    reports = run_checks(scn, fields=fields)
    ok = all(r["pass"] for r in reports)
    doc = {
        "scenario": scn.name,
        "seed": scn.seed,
        "fingerprint": scn.problem.fingerprint(),
        "pass": ok,
        "reports": reports,
        "solvers": solvers,
    }
    write_json(out_dir / "report.json", doc)
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), doc


def _parse_value(text: str):
    try:
        val = json.loads(text)
    except json.JSONDecodeError:
        raise ConfigError(f"sweep value {text!r} is not a JSON scalar") from None
    if isinstance(val, (dict, list)) or val is None:
        raise ConfigError(f"sweep value {text!r} is not a scalar")
    return val


def sweep(scn: Scenario, param: str, values: Sequence, out_dir: Path | None = None) -> tuple[int, list[dict]]:
    """Run the scenario once per value of ``param`` (dotted path), in parallel.

    Each value writes into its own subdirectory; ``sweep.json`` aggregates the
    reports and ``sweep.csv`` lists ``value, check_name, worst_violation`` rows.
    """
    out_dir = Path(out_dir or scn.output_dir)
    if not values:
        return EXIT_OK, []
    raws = [set_path(scn.raw, param, v) for v in values]
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(arg):
        v, raw = arg
        sub = out_dir / f"{param}={v}"
        try:
            code, doc = run_scenario(parse_scenario(raw, scn.base), sub, plots=False)
            return {"value": v, "status": "pass" if code == EXIT_OK else "fail", "reports": doc["reports"]}
        except FracDiffError as exc:
            return {"value": v, "status": "error", "error": str(exc), "reports": []}

    results = pmap(one, list(zip(values, raws)))
    write_json(out_dir / "sweep.json", results)
    rows = [
        (str(r["value"]), rep["check_name"], rep["worst_violation"], str(rep["pass"]).lower(),
         str(rep["in_hypothesis"]).lower())
        for r in results for rep in r["reports"]
    ]
    write_table_csv(out_dir / "sweep.csv", ["value", "check_name", "worst_violation", "pass", "in_hypothesis"], rows)
    series: dict[str, list[float]] = {}
    xs = [r["value"] for r in results]
    if all(isinstance(x, (int, float)) for x in xs) and all(r["reports"] for r in results):
        for r in results:
            for j, rep in enumerate(r["reports"]):
                series.setdefault(f"{j}:{rep['check_name']}", []).append(rep["worst_violation"])
        if series and all(len(v) == len(xs) for v in series.values()):
            from .plotting import plot_sweep

            plot_sweep(param, xs, series, out_dir / "sweep.png")
    if any(r["status"] == "error" for r in results):
        return EXIT_ERROR, results
    if any(r["status"] == "fail" for r in results):
        return EXIT_CHECK_FAILED, results
    return EXIT_OK, results


# }}}


# {{{ argument parsing


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracdiff", description="Time-fractional diffusion solvers and positivity checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve and check a scenario")
    r.add_argument("scenario", type=Path)
    r.add_argument("--out-dir", type=Path, help="output directory (default from the scenario)")
    r.add_argument("--no-plots", action="store_true", help="skip PNG rendering")

    s = sub.add_parser("solve", help="solve a scenario and write the field as CSV")
    s.add_argument("--config", type=Path, required=True)
    s.add_argument("--solver", choices=("spectral", "l1", "both"), default="spectral")
    s.add_argument("--out", type=Path, required=True, help="CSV path; 'both' appends _spectral/_l1")
    s.add_argument("--plot", action="store_true", help="also render a PNG next to each CSV")

    c = sub.add_parser("check", help="run one kind of check from a scenario")
    c.add_argument("name", choices=CHECKS)
    c.add_argument("--config", type=Path, required=True)
    c.add_argument("--report", type=Path, required=True)

    w = sub.add_parser("sweep", help="run a scenario over values of one parameter")
    w.add_argument("scenario", type=Path)
    w.add_argument("--param", required=True, help="dotted path, e.g. alpha or coefficients.b0")
    w.add_argument("--values", required=True, help="comma-separated JSON scalars (may be empty)")
    w.add_argument("--out-dir", type=Path)

    m = sub.add_parser("ml", help="evaluate the Mittag-Leffler function")
    m.add_argument("--alpha", type=float, required=True)
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--z", type=float, required=True)

    f = sub.add_parser("frac-op", help="apply a fractional operator to a sampled signal")
    f.add_argument("--op", choices=("jint", "caputo"), required=True)
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--input", type=Path, required=True, help="CSV with columns t,<name>")
    f.add_argument("--out", type=Path, help="CSV output (default stdout)")
    return ap


def _cmd_solve(args) -> int:
    scn = load_scenario(args.config)
    solvers = ("spectral", "l1") if args.solver == "both" else (args.solver,)
    fields = _Fields(scn)
    sidecar = {}
    for s in solvers:
        u = fields.get(s)
        path = args.out if len(solvers) == 1 else args.out.with_name(f"{args.out.stem}_{s}{args.out.suffix}")
        write_field_csv(path, u)
        sidecar[s] = _solver_sidecar(u)
        if args.plot:
            from .plotting import plot_field

            plot_field(u, path.with_suffix(".png"), f"{scn.name} ({s})")
    write_json(args.out.with_suffix(".json"), sidecar)
    return EXIT_OK


def _cmd_check(args) -> int:
    scn = load_scenario(args.config)
    reports = run_checks(scn, [args.name])
    write_json(args.report, reports[0] if len(reports) == 1 else reports)
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_CHECK_FAILED


def _cmd_frac_op(args) -> int:
    t, y = read_signal_csv(args.input)
    sig = TimeSignal(TimeGrid(t), y)
    out = rl_integral(sig, args.alpha) if args.op == "jint" else caputo_l1(sig, args.alpha)
    rows = list(zip(t, out.values))
    if args.out is None:
        sys.stdout.write("t,value\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in rows))
    else:
        write_table_csv(args.out, ["t", "value"], rows)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the exit status."""
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            code, _ = run_scenario(load_scenario(args.scenario), args.out_dir, False if args.no_plots else None)
            return code
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "sweep":
            values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
            code, _ = sweep(load_scenario(args.scenario), args.param, values, args.out_dir)
            return code
        if args.command == "ml":
            print(repr(float(ml(MLParams(args.alpha, args.beta), args.z))))
            return EXIT_OK
        return _cmd_frac_op(args)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (FracDiffError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


# }}}


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
