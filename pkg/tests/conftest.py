import numpy as np
import pytest

from invheat import (
    CoefficientTrajectory,
    FdmGrid,
    compute_coefficients,
    parse_problem,
    run_inverse_fdm,
    solve_inverse_spectral,
)
from invheat.cli import bundled_example_text

# exact pair of the bundled benchmark problem
A_EXACT = lambda t: 1.0 / (4.0 * np.pi**2) + np.exp(4.0 * np.asarray(t, dtype=float))
U_EXACT = lambda x, t: (1.0 - np.asarray(x, dtype=float)) * np.sin(
    2.0 * np.pi * np.asarray(x, dtype=float)
) * np.exp(-np.asarray(t, dtype=float))


@pytest.fixture(scope="session")
def paper():
    return parse_problem(bundled_example_text())


@pytest.fixture(scope="session")
def paper_coeffs(paper):
    return compute_coefficients(paper, K=64)


@pytest.fixture(scope="session")
def spectral_solution(paper):
    """Full fixed-point solve at the benchmark defaults (shared: ~1 s)."""
    return solve_inverse_spectral(paper, K=64, tol=1e-6, max_iter=1000, n_space=201)


@pytest.fixture(scope="session")
def fdm_solution(paper):
    """Predictor-corrector solve on the benchmark grid h=0.005, tau=h/4."""
    grid = FdmGrid(M=200, N=200, T=paper.T)
    return run_inverse_fdm(paper, grid)


def random_admissible_trajectory(bounds, T, n, rng):
    """A smooth random trajectory inside the admissible band.

    Values are drawn log-uniformly (the band spans several decades), with
    a few smooth oscillations, clipped a hair inside the upper endpoint:
    the bound is attained only by the worst-case constant trajectory,
    where the containment estimate is tight.
    """
    llo, lhi = np.log(bounds.lo), np.log(bounds.hi)
    lcap = lhi - 0.005 * (lhi - llo)
    t = np.linspace(0.0, T, n + 1)
    u = np.full(n + 1, rng.uniform(llo, lcap))
    for m in range(1, 4):
        amp = (lhi - llo) * rng.uniform(0.0, 0.25) / m
        u = u + amp * np.sin(np.pi * m * t / T + rng.uniform(0.0, 2.0 * np.pi))
    return CoefficientTrajectory(t, np.exp(np.clip(u, llo, lcap)))
