"""Crank-Nicolson march, the discrete identification formula, and the
predictor-corrector loop."""

import math

import numpy as np
import pytest

from invheat import (
    CoefficientTrajectory,
    DegenerateProblemError,
    FdmGrid,
    FlatGradientError,
    UsageError,
    assemble_step,
    estimate_a,
    integrate,
    parse_problem,
    run_forward_fdm,
    run_inverse_fdm,
    solve_bordered,
)

from conftest import A_EXACT, U_EXACT


class TestGrid:
    def test_spacing_and_fictitious_point(self):
        g = FdmGrid(M=4, N=16, T=0.25)
        assert g.h == 0.25
        assert g.tau == pytest.approx(0.015625)
        np.testing.assert_allclose(g.x, [0, 0.25, 0.5, 0.75, 1.0, 1.25])
        assert g.t.size == 17

    def test_too_coarse_rejected(self):
        with pytest.raises(UsageError):
            FdmGrid(M=2, N=10, T=1.0)
        with pytest.raises(UsageError):
            FdmGrid(M=10, N=0, T=1.0)


class TestAssembleStep:
    def test_unit_ratio(self):
        # R = 2 h^2 / (tau (a + a)) = 2 * 0.0625 / (0.0625 * 2) = 1
        g = FdmGrid(M=4, N=4, T=0.25)
        A, b = assemble_step(np.zeros(6), 1.0, 1.0, np.zeros(4), np.zeros(4), g)
        assert np.all(A.main == -4.0)

    def test_corner_structure_independent_of_ratio(self):
        g = FdmGrid(M=8, N=20, T=0.5)
        for pair in ((1.0, 1.0), (0.3, 2.2)):
            A, _ = assemble_step(np.zeros(10), *pair, np.zeros(8), np.zeros(8), g)
            dense = A.dense()
            assert dense[0, 7] == 1.0
            assert dense[7, 6] == 2.0

    def test_constants_are_preserved(self):
        # with F = 0 a constant field solves the step: row sums are -2R
        # and every rhs entry is -2Rc
        g = FdmGrid(M=6, N=12, T=0.3)
        c = 1.7
        A, b = assemble_step(np.full(8, c), 0.9, 1.1, np.zeros(6), np.zeros(6), g)
        R = 2 * g.h**2 / (g.tau * 2.0)
        np.testing.assert_allclose(A.dense().sum(axis=1), -2 * R, atol=1e-13)
        np.testing.assert_allclose(b, -2 * R * c, atol=1e-13)
        np.testing.assert_allclose(solve_bordered(A, b), c, atol=1e-11)

    def test_sign_flipped_pair_rejected(self):
        g = FdmGrid(M=4, N=4, T=0.25)
        with pytest.raises(DegenerateProblemError):
            assemble_step(np.zeros(6), 1.0, -1.0, np.zeros(4), np.zeros(4), g)


class TestEstimateA:
    def test_benchmark_level_zero(self):
        # all inputs in closed form: Et = -1/(2 pi), Fin = 2 pi,
        # u1 - u0 = (1 - h) sin(2 pi h)
        h = 0.005
        den = (1 - h) * math.sin(2 * math.pi * h)
        expected = (1.0 / (2 * math.pi) + 2 * math.pi) * h / den
        got = estimate_a(-1.0 / (2 * math.pi), 2 * math.pi, den, 0.0, h)
        assert got == pytest.approx(expected, rel=1e-14)
        assert got == pytest.approx(1.0307, abs=5e-4)   # one-sided bias over 1.02533

    def test_flat_gradient(self):
        with pytest.raises(FlatGradientError):
            estimate_a(-1.0, 1.0, 0.5, 0.5, 0.01)

    def test_vanishing_numerator(self):
        assert estimate_a(1.0, 1.0, 0.2, 0.1, 0.01) == 0.0


class TestForwardMarch:
    def test_benchmark_against_exact(self, paper):
        grid = FdmGrid(M=200, N=200, T=paper.T)
        a = CoefficientTrajectory.from_function(A_EXACT, paper.T, n=grid.N)
        u = run_forward_fdm(paper, a, grid)
        assert u.sup_error(U_EXACT) <= 5e-3

    def test_constants_preserved_along_march(self):
        p = parse_problem("phi = 2 + 0*x\nF = 0*x*t\nE = 2 - t\nT = 0.25")
        grid = FdmGrid(M=10, N=8, T=0.25)
        a = CoefficientTrajectory.constant(1.0, 0.25, n=8)
        u = run_forward_fdm(p, a, grid)
        np.testing.assert_allclose(u.values, 2.0, atol=1e-11)

    def test_wrap_closure_exact(self, paper):
        grid = FdmGrid(M=50, N=40, T=paper.T)
        a = CoefficientTrajectory.from_function(A_EXACT, paper.T, n=grid.N)
        u = run_forward_fdm(paper, a, grid)
        np.testing.assert_array_equal(u.values[:, 0], u.values[:, -1])

    def test_step_linear_system_residual(self, paper):
        # one assembled step, solved then multiplied back
        grid = FdmGrid(M=100, N=100, T=paper.T)
        x = grid.x
        u0 = np.asarray(paper.phi(x[:101]))
        u = np.concatenate([u0, [u0[99]]])
        F0 = np.asarray(paper.source(x[1:101], 0.0))
        F1 = np.asarray(paper.source(x[1:101], grid.tau))
        A, b = assemble_step(u, 1.02, 1.04, F0, F1, grid)
        sol = solve_bordered(A, b)
        assert np.max(np.abs(A.matvec(sol) - b)) <= 1e-10 * np.max(np.abs(b))


class TestInverseMarch:
    def test_benchmark_errors(self, paper):
        # half the acceptance resolution keeps the module suite quick
        grid = FdmGrid(M=100, N=100, T=paper.T)
        sol = run_inverse_fdm(paper, grid)
        rel = np.abs(sol.a - A_EXACT(grid.t)) / A_EXACT(grid.t)
        assert rel.max() <= 0.05
        assert sol.to_field().sup_error(U_EXACT) <= 0.05
        assert not sol.warnings

    def test_enforced_energy_consistency(self, paper, fdm_solution):
        drift = fdm_solution.energy_drift(paper.energy)
        assert np.max(drift) <= 1e-12

    def test_raw_drift_bounded_and_decreasing(self, paper):
        # without the energy projection the drift stays bounded and
        # shrinks under refinement (it scales with the gradient bias)
        drifts = []
        for M in (100, 200):
            grid = FdmGrid(M=M, N=M, T=paper.T)
            sol = run_inverse_fdm(paper, grid, enforce_energy=False)
            drifts.append(sol.raw_energy_drift.max())
        assert drifts[0] <= 0.05
        assert drifts[1] < drifts[0]

    def test_inner_loop_is_noop_at_fixed_point(self, paper):
        # raw scheme (no energy projection): the invariant concerns the
        # plain inner loop, and M=100 is fine enough for the raw march
        inner_tol = 1e-10
        grid = FdmGrid(M=100, N=100, T=paper.T)
        sol = run_inverse_fdm(paper, grid, inner_tol=inner_tol, enforce_energy=False)
        # replay one corrector pass at the last level from the accepted state
        M, h = grid.M, grid.h
        u_prev = np.concatenate([sol.U[-2], [sol.U[-2][M - 1]]])
        u_conv = np.concatenate([sol.U[-1], [sol.U[-1][M - 1]]])
        tN = grid.t[-1]
        fin = integrate(lambda x: np.asarray(paper.source(x, tN)), 0.0, 1.0)
        a_new = estimate_a(float(paper.energy.derivative(tN)), fin, u_conv[1], u_conv[0], h)
        A, b = assemble_step(
            u_prev,
            sol.a[-1],
            a_new,
            np.asarray(paper.source(grid.x[1 : M + 1], grid.t[-2])),
            np.asarray(paper.source(grid.x[1 : M + 1], tN)),
            grid,
        )
        u_new = solve_bordered(A, b)
        change = max(abs(a_new - sol.a[-1]), float(np.max(np.abs(u_new - sol.U[-1][1:]))))
        assert change <= inner_tol

    def test_flat_initial_gradient(self):
        p = parse_problem("phi = 2 + 0*x\nF = 0*x*t\nE = 2 - t\nT = 0.25")
        with pytest.raises(FlatGradientError) as err:
            run_inverse_fdm(p, FdmGrid(M=10, N=4, T=0.25))
        assert err.value.level == 0

    def test_inner_budget_warning_recorded(self, paper):
        grid = FdmGrid(M=50, N=20, T=paper.T)
        sol = run_inverse_fdm(paper, grid, inner_tol=1e-14, max_inner=1)
        assert any("inner loop stopped" in w for w in sol.warnings)

    def test_inner_counts_recorded(self, fdm_solution):
        assert np.all(fdm_solution.inner_counts[1:] >= 1)
        assert np.max(fdm_solution.inner_residuals) <= 1e-8

    def test_level_averaging_variant(self, paper):
        # the across-levels coefficient pair gives comparable accuracy
        grid = FdmGrid(M=100, N=100, T=paper.T)
        sol = run_inverse_fdm(paper, grid, averaging="levels")
        rel = np.abs(sol.a - A_EXACT(grid.t)) / A_EXACT(grid.t)
        assert rel.max() <= 0.05
        with pytest.raises(UsageError):
            run_inverse_fdm(paper, grid, averaging="bogus")
