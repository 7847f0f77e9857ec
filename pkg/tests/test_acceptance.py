"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion.
"""

import time

import numpy as np
import pytest

from invheat import (
    BorderedTridiagonalMatrix,
    FdmGrid,
    QuadratureConfig,
    apply_P,
    convergence_study,
    run_inverse_fdm,
    solve_bordered,
    stability_bounds,
    stability_experiment,
)
from invheat.basis import basis_matrix_x, basis_matrix_y
from invheat.cli import main
from invheat.numerics import quadrature_nodes_weights

from conftest import A_EXACT, U_EXACT, random_admissible_trajectory
from test_numerics import _random_dd


def _report(n, text):
    print(f"\nACCEPTANCE {n}: {text} -- PASS")


class TestAcceptance:
    def test_criterion_1_coefficient_table_reproduction(self, paper, tmp_path):
        # FDM at h = 0.005, tau = h/4: max relative coefficient error over
        # all time levels <= 0.05, within the runtime budget; the reproduce
        # command must agree
        start = time.time()
        grid = FdmGrid(M=200, N=200, T=paper.T)
        sol = run_inverse_fdm(paper, grid)
        elapsed = time.time() - start
        exact = A_EXACT(grid.t)
        rel = float(np.max(np.abs(sol.a - exact) / np.abs(exact)))
        assert rel <= 0.05, f"max relative coefficient error {rel}"
        assert elapsed <= 300.0, f"runtime {elapsed:.1f}s exceeds budget"
        assert main(["reproduce", "--method", "fdm", "--out", str(tmp_path / "rep")]) == 0
        _report(1, f"fdm coefficient: max rel error {rel:.4f} <= 0.05 in {elapsed:.1f}s")

    def test_criterion_2_field_table_reproduction(self, paper, fdm_solution):
        # absolute field error at the reported layer (j = 70) <= 0.03
        grid = fdm_solution.grid
        layer = 70
        xs = grid.x[: grid.M + 1]
        err = float(np.max(np.abs(fdm_solution.U[layer] - U_EXACT(xs, grid.t[layer]))))
        assert err <= 0.03, f"layer {layer} field error {err}"
        _report(2, f"fdm field: layer-{layer} max abs error {err:.4f} <= 0.03")

    def test_criterion_3_fixed_point_and_recovery(self, paper, paper_coeffs, spectral_solution):
        # the exact coefficient is a 1e-3 fixed point of the operator at
        # K = 64, and the full iteration recovers the pair to 2e-3 / 1e-4
        from invheat import CoefficientTrajectory

        tgrid = np.linspace(0.0, paper.T, 513)
        a_star = CoefficientTrajectory(tgrid, A_EXACT(tgrid))
        P = apply_P(a_star, paper_coeffs, paper.energy.derivative)
        fp_resid = float(np.max(np.abs(P.values - a_star.values)))
        assert fp_resid <= 1e-3, f"fixed-point residual {fp_resid}"

        a, u, diag = spectral_solution
        exact = A_EXACT(a.grid)
        rel = float(np.max(np.abs(a.values - exact) / np.abs(exact)))
        usup = u.sup_error(U_EXACT)
        assert rel <= 2e-3, f"coefficient relative error {rel}"
        assert usup <= 1e-4, f"field sup error {usup}"
        _report(
            3,
            f"spectral: ||P[a*]-a*|| {fp_resid:.2e} <= 1e-3, "
            f"a rel {rel:.2e} <= 2e-3, u sup {usup:.2e} <= 1e-4",
        )

    def test_criterion_4_biorthonormality(self):
        # |(X_i, Y_j) - delta_ij| <= 1e-9 for all i, j <= 128
        nodes, w = quadrature_nodes_weights(0.0, 1.0, QuadratureConfig("simpson", 1024))
        X = basis_matrix_x(129, nodes)
        Y = basis_matrix_y(129, nodes)
        err = float(np.max(np.abs((X * w) @ Y.T - np.eye(129))))
        assert err <= 1e-9, f"biorthonormality defect {err}"
        _report(4, f"biorthonormality: max defect {err:.2e} <= 1e-9 for i,j <= 128")

    def test_criterion_5_band_containment(self, paper, paper_coeffs):
        # twenty random admissible trajectories: the operator image stays
        # inside [C0/C3, C1/C2] within 1e-9
        bounds = stability_bounds(paper_coeffs, paper.energy, paper.T)
        rng = np.random.default_rng(777)
        worst_hi, worst_lo = -np.inf, np.inf
        for _ in range(20):
            a = random_admissible_trajectory(bounds, paper.T, 512, rng)
            P = apply_P(a, paper_coeffs, paper.energy.derivative)
            worst_hi = max(worst_hi, float(np.max(P.values - bounds.hi)))
            worst_lo = min(worst_lo, float(np.min(P.values - bounds.lo)))
        assert worst_hi <= 1e-9, f"band exceeded above by {worst_hi}"
        assert worst_lo >= -1e-9, f"band exceeded below by {worst_lo}"
        _report(
            5,
            f"band containment: margins {worst_lo:.3e} above lo, {-worst_hi:.3e} below hi",
        )

    def test_criterion_6_forward_order(self, paper):
        # Richardson order estimates across h in {1/50, 1/100, 1/200}
        study = convergence_study(paper, "fdm-forward", [50, 100, 200])
        assert np.all((study.orders >= 1.7) & (study.orders <= 2.3)), study.orders
        _report(6, f"forward march order estimates {np.round(study.orders, 3)} in [1.7, 2.3]")

    def test_criterion_7_overdetermination_consistency(self, paper, spectral_solution, fdm_solution):
        # spectral: Simpson integral of the field tracks E within 10x the
        # iteration tolerance; fdm: trapezoid integral (the scheme's own
        # rule) tracks E within 10x the inner tolerance
        a, u, diag = spectral_solution
        nodes, w = quadrature_nodes_weights(0.0, 1.0, QuadratureConfig("simpson", u.x.size - 1))
        sp_drift = float(np.max(np.abs(u.values @ w - np.asarray(paper.energy(u.t)))))
        assert sp_drift <= 10 * 1e-6, f"spectral drift {sp_drift}"
        fd_drift = float(np.max(fdm_solution.energy_drift(paper.energy)))
        assert fd_drift <= 10 * 1e-8, f"fdm drift {fd_drift}"
        _report(
            7,
            f"overdetermination: spectral drift {sp_drift:.2e} <= 1e-5, "
            f"fdm drift {fd_drift:.2e} <= 1e-7",
        )

    def test_criterion_8_continuous_dependence(self, paper):
        # deviations vanish at delta = 0 and the deviation/perturbation
        # ratios stay within a factor of 4 across the tested range
        results = stability_experiment(paper, [0.0, 1e-4, 2e-4, 4e-4])
        zero = results[0]
        assert zero.feasible and zero.a_deviation == 0.0 and zero.u_deviation == 0.0
        ratios = [r.ratio_a for r in results[1:] if r.feasible]
        assert len(ratios) == 3
        spread = max(ratios) / min(ratios)
        assert spread <= 4.0, f"ratio spread {spread}"
        _report(
            8,
            f"continuous dependence: zero-delta deviation 0, "
            f"ratio spread {spread:.3f} <= 4",
        )

    def test_criterion_9_linear_algebra_oracle(self):
        # bordered solver vs dense Gaussian elimination on 100 random
        # instances, componentwise within 1e-9
        rng = np.random.default_rng(99)
        worst = 0.0
        sizes = [4, 16, 128]
        for trial in range(100):
            M = sizes[trial % 3]
            A = _random_dd(rng, M)
            b = rng.normal(size=M)
            x = solve_bordered(A, b)
            x_dense = np.linalg.solve(A.dense(), b)
            worst = max(worst, float(np.max(np.abs(x - x_dense))))
        assert worst <= 1e-9, f"worst deviation from the dense oracle {worst}"
        _report(9, f"bordered solver vs dense oracle: worst deviation {worst:.2e} <= 1e-9")
