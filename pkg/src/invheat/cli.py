"""Command-line front end.

Subcommands: validate, solve, reproduce, convergence, stability.
Exit codes: 0 success, 1 numerical/acceptance failure, 2 usage or input
error.  Every run writes CSVs (and companion figures) into --out.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, plots
from .errors import AssumptionViolationError, InvheatError, UsageError
from .fdm import FdmGrid, run_inverse_fdm
from .fields import CoefficientTrajectory
from .numerics import DEFAULT_X_QUAD
from .problem import load_problem, parse_problem, validate_assumptions
from .spectral import solve_inverse_spectral

# acceptance tolerances for the bundled benchmark (reproduce)
TABLE1_MAX_REL = 0.05      # coefficient, max over all time levels
TABLE2_MAX_ABS = 0.03      # field, at the reported layer
TABLE2_LAYER = 70
SPECTRAL_A_REL = 2e-3
SPECTRAL_U_SUP = 1e-4


def bundled_example_text() -> str:
    return resources.files("invheat.data").joinpath("paper_example.prob").read_text("utf-8")


def _load(path_or_none):
    if path_or_none is None:
        return parse_problem(bundled_example_text())
    p = Path(path_or_none)
    if not p.is_file():
        raise UsageError(f"problem file not found: {p}")
    return load_problem(p)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(args) -> int:
    problem = _load(args.problem)
    report = validate_assumptions(problem, k_max=args.K)
    print(report.render())
    print("all clauses pass" if report.passed else "FAILED clauses: "
          + ", ".join(c.name for c in report.failures))
    return 0 if report.passed else 1


def _write_solution_outputs(out, tag, tgrid, avals, field, problem):
    analysis.write_csv(out / f"a_{tag}.csv", ["t", "a"], list(zip(tgrid, avals)))
    rows = []
    for j, tj in enumerate(field.t):
        for i, xi in enumerate(field.x):
            rows.append([xi, tj, field.values[j, i]])
    analysis.write_csv(out / f"u_{tag}.csv", ["x", "t", "u"], rows)
    exact = None
    if problem.exact_a is not None:
        exact = np.asarray(problem.exact_a(tgrid), dtype=float)
        table = analysis.ErrorTable(list(tgrid), exact, avals)
        analysis.write_csv(out / f"a_error_table_{tag}.csv", table.header, table.rows())
    if problem.exact_u is not None:
        X, Tg = np.meshgrid(field.x, field.t)
        err = np.abs(field.values - problem.exact_u(X, Tg))
        analysis.write_csv(
            out / f"u_error_summary_{tag}.csv",
            ["t", "max_abs_error"],
            list(zip(field.t, err.max(axis=1))),
        )
    plots.plot_coefficient(tgrid, avals, out / f"a_{tag}.png", exact=exact)
    plots.plot_field(field.x, field.t, field.values, out / f"u_{tag}.png")


def cmd_solve(args) -> int:
    problem = _load(args.problem)
    out = _outdir(args)
    if args.method == "spectral":
        a, u, diag = solve_inverse_spectral(
            problem,
            K=args.K,
            tol=args.tol,
            max_iter=args.max_iter,
            n_space=args.M + 1,
            force=args.force,
        )
        _write_solution_outputs(out, "spectral", a.grid, a.values, u, problem)
        analysis.write_csv(
            out / "diagnostics_spectral.csv",
            ["key", "value"],
            [
                ["iterations", diag.iterations],
                ["residual", diag.residual],
                ["band_lo", diag.bounds.lo],
                ["band_hi", diag.bounds.hi],
                ["T0", diag.bounds.t0],
                ["uniqueness_certified", str(diag.uniqueness_certified)],
                ["phi_tail", diag.phi_tail],
                ["warnings", "; ".join(diag.warnings)],
            ],
        )
        print(
            f"spectral solve: {diag.iterations} iterations, residual {diag.residual:.3e}, "
            f"uniqueness {'certified' if diag.uniqueness_certified else 'not certified'} "
            f"(T0={diag.bounds.t0:.3e})"
        )
    else:
        if not args.force:
            report = validate_assumptions(problem, k_max=min(args.K, 64))
            if not report.passed:
                names = [c.name for c in report.failures]
                raise AssumptionViolationError(
                    "assumptions fail: " + ", ".join(names) + " (use --force to run anyway)",
                    clauses=names,
                )
        grid = FdmGrid(M=args.M, N=args.N, T=problem.T)
        sol = run_inverse_fdm(problem, grid, inner_tol=args.tol_inner, max_inner=args.max_iter)
        _write_solution_outputs(out, "fdm", grid.t, sol.a, sol.to_field(), problem)
        analysis.write_csv(
            out / "diagnostics_fdm.csv",
            ["key", "value"],
            [
                ["mean_inner_iterations", float(np.mean(sol.inner_counts[1:]))],
                ["max_inner_residual", float(np.max(sol.inner_residuals))],
                ["max_raw_energy_drift", float(np.max(sol.raw_energy_drift))],
                ["warnings", "; ".join(sol.warnings[:20])],
            ],
        )
        print(
            f"fdm solve: grid {args.M}x{args.N}, "
            f"mean inner iterations {np.mean(sol.inner_counts[1:]):.2f}"
        )
    print(f"outputs in {out}")
    return 0


def cmd_reproduce(args) -> int:
    problem = _load(args.problem)
    if not problem.has_exact:
        raise UsageError("reproduce needs a problem with exact_a and exact_u")
    out = _outdir(args)
    failures = []

    run_fdm = args.method in ("both", "fdm")
    run_spectral = args.method in ("both", "spectral")

    if run_fdm:
        # benchmark grid: h = 0.005, tau = h/4
        M = 200
        grid = FdmGrid(M=M, N=round(4 * M * problem.T), T=problem.T)
        sol = run_inverse_fdm(problem, grid)
        exact_a = np.asarray(problem.exact_a(grid.t), dtype=float)
        table1 = analysis.ErrorTable(list(grid.t), exact_a, sol.a)
        analysis.write_csv(out / "table1_fdm_a.csv", table1.header, table1.rows())
        layer = min(TABLE2_LAYER, grid.N)
        xs = grid.x[: M + 1]
        exact_u_layer = np.asarray(problem.exact_u(xs, grid.t[layer]), dtype=float)
        table2 = analysis.ErrorTable(list(xs), exact_u_layer, sol.U[layer])
        analysis.write_csv(out / "table2_fdm_u.csv", table2.header, table2.rows())
        plots.plot_coefficient(grid.t, sol.a, out / "a_fdm.png", exact=exact_a)
        plots.plot_field(xs, grid.t, sol.U, out / "u_fdm.png")
        rel = table1.max_relative
        abs2 = table2.max_error
        print(f"fdm: max relative a error {rel:.4f} (tolerance {TABLE1_MAX_REL})")
        print(f"fdm: layer {layer} max |u error| {abs2:.4f} (tolerance {TABLE2_MAX_ABS})")
        if not rel <= TABLE1_MAX_REL:
            failures.append(f"fdm coefficient error {rel:.4f} > {TABLE1_MAX_REL}")
        if not abs2 <= TABLE2_MAX_ABS:
            failures.append(f"fdm field error {abs2:.4f} > {TABLE2_MAX_ABS}")

    if run_spectral:
        a, u, diag = solve_inverse_spectral(problem, K=args.K, tol=args.tol, max_iter=args.max_iter)
        exact_a = np.asarray(problem.exact_a(a.grid), dtype=float)
        rel = float(np.max(np.abs(a.values - exact_a) / np.abs(exact_a)))
        usup = u.sup_error(problem.exact_u)
        table = analysis.ErrorTable(list(a.grid), exact_a, a.values)
        analysis.write_csv(out / "spectral_a.csv", table.header, table.rows())
        plots.plot_coefficient(a.grid, a.values, out / "a_spectral.png", exact=exact_a)
        plots.plot_field(u.x, u.t, u.values, out / "u_spectral.png")
        print(f"spectral: max relative a error {rel:.2e} (tolerance {SPECTRAL_A_REL})")
        print(f"spectral: sup u error {usup:.2e} (tolerance {SPECTRAL_U_SUP})")
        if not rel <= SPECTRAL_A_REL:
            failures.append(f"spectral coefficient error {rel:.2e} > {SPECTRAL_A_REL}")
        if not usup <= SPECTRAL_U_SUP:
            failures.append(f"spectral field error {usup:.2e} > {SPECTRAL_U_SUP}")

    if failures:
        for f in failures:
            print("FAIL:", f)
        return 1
    print("reproduction PASS")
    return 0


def cmd_convergence(args) -> int:
    problem = _load(args.problem)
    if not problem.has_exact:
        raise UsageError("convergence study needs exact_a and exact_u (exact solution required)")
    out = _outdir(args)
    if args.method == "spectral":
        levels = [max(2, args.K // 4), max(3, args.K // 2), args.K]
    else:
        levels = [max(4, args.M // 4), max(5, args.M // 2), args.M]
    study = analysis.convergence_study(problem, args.method, levels)
    analysis.write_csv(out / f"convergence_{args.method}.csv", study.header, study.rows())
    plots.plot_convergence(study.levels, study.errors, out / f"convergence_{args.method}.png")
    print(f"{args.method}: errors {[f'{e:.3e}' for e in study.errors]}")
    print(f"{args.method}: orders {[f'{o:.2f}' for o in study.orders]}")
    print(f"outputs in {out}")
    return 0


def cmd_stability(args) -> int:
    problem = _load(args.problem)
    out = _outdir(args)
    deltas = [float(d) for d in args.deltas.split(",")]
    results = analysis.stability_experiment(
        problem, deltas, seed=args.seed, K=args.K, tol=args.tol, max_iter=args.max_iter
    )
    rows = [row for r in results for row in r.rows()]
    analysis.write_csv(out / "stability.csv", results[0].header, rows)
    feasible = [r for r in results if r.feasible and r.delta > 0]
    if feasible:
        plots.plot_stability(
            [r.delta for r in feasible], [r.ratio_a for r in feasible], out / "stability.png"
        )
        ratios = [r.ratio_a for r in feasible]
        bounded = max(ratios) <= 4.0 * min(ratios)
        print(f"ratios ||a-a~||/delta: {[f'{r:.3f}' for r in ratios]}")
        print(f"bounded-ratio verdict: {'pass' if bounded else 'fail'}")
        print(f"outputs in {out}")
        return 0 if bounded else 1
    print("no feasible perturbations")
    return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="invheat",
        description="Identify a time-dependent diffusivity and temperature field "
        "from an integral energy measurement.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_problem=True):
        if needs_problem:
            p.add_argument(
                "problem",
                nargs="?",
                default=None,
                help="problem file (defaults to the bundled benchmark)",
            )
        p.add_argument("--K", type=int, default=64, help="series truncation order")
        p.add_argument("--M", type=int, default=200, help="space subintervals")
        p.add_argument("--N", type=int, default=200, help="time steps")
        p.add_argument("--tol", type=float, default=1e-6, help="fixed-point tolerance")
        p.add_argument("--tol-inner", type=float, default=1e-8, help="fdm inner tolerance")
        p.add_argument("--max-iter", type=int, default=1000, help="iteration budget")
        p.add_argument("--out", default="invheat-out", help="output directory")
        p.add_argument("--force", action="store_true", help="run despite failing assumptions")
        p.add_argument("--seed", type=int, default=0, help="experiment seed (recorded)")

    p = sub.add_parser("validate", help="check the solvability assumptions")
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("solve", help="run one inverse solver")
    p.add_argument("--method", choices=["spectral", "fdm"], default="spectral")
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("reproduce", help="reproduce the bundled benchmark tables")
    p.add_argument("--method", choices=["both", "spectral", "fdm"], default="both")
    common(p)
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("convergence", help="grid refinement study")
    p.add_argument(
        "--method", choices=["fdm-forward", "fdm-inverse", "spectral"], default="fdm-forward"
    )
    common(p)
    p.set_defaults(fn=cmd_convergence)

    p = sub.add_parser("stability", help="data perturbation experiment")
    p.add_argument("--deltas", default="1e-4,2e-4,4e-4", help="comma-separated perturbations")
    common(p)
    p.set_defaults(fn=cmd_stability)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvheatError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
