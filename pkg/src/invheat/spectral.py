"""Series forward solver and fixed-point inverse solver.

The temperature is expanded on the biorthonormal family of basis.py.  The
mode amplitudes obey, with lam_k = (2 pi k)^2 and W(t) the prefix integral
of the diffusivity,

    u_0'      = F_0
    u_2k'     + lam_k a u_2k                    = F_2k
    u_{2k-1}' + lam_k a u_{2k-1} + 4 pi k a u_2k = F_{2k-1}

(the coupling term carries a(t): it comes from X_2k'' = -lam_k X_2k
- 4 pi k X_{2k-1} multiplied by the diffusivity in the heat operator).
Solving by Duhamel gives

    u_2k(t)     = phi_2k e^{-lam_k W(t)} + int_0^t F_2k(s) e^{-lam_k (W(t)-W(s))} ds
    u_{2k-1}(t) = (phi_{2k-1} - 4 pi k phi_2k W(t)) e^{-lam_k W(t)}
                + int_0^t (F_{2k-1}(s) - 4 pi k F_2k(s)(W(t)-W(s))) e^{-lam_k (W(t)-W(s))} ds

Differentiating the energy measurement turns the problem into a fixed
point a = P[a] with

    P[a](t) = (2 F_0(t) + sum 2/(pi k) F_2k(t) - E'(t))
            / (sum 8 pi k [phi_2k e^{-lam_k W(t)} + int_0^t F_2k e^{-lam_k (W(t)-W(s))} ds])

solved here by Picard iteration.

Exponential kernels never re-integrate the diffusivity: W comes from a
prefix-sum table (exact for the piecewise-linear trajectory), and the
Duhamel integrals accumulate stepwise through the semigroup identity
e^{-lam(W_{j+1}-W_i)} = e^{-lam(W_{j+1}-W_j)} e^{-lam(W_j-W_i)} with a
two-panel Simpson rule per step, which keeps stiff modes stable (the
locally integrated kernel can never overflow).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import basis_matrix_x, basis_matrix_y, eigen_x, eigen_y, eigenvalue, mode_number, project
from .errors import (
    AssumptionViolationError,
    DegenerateProblemError,
    NonConvergenceError,
    UsageError,
)
from .fields import CoefficientTrajectory, TemperatureField
from .numerics import (
    DEFAULT_T_QUAD,
    DEFAULT_X_QUAD,
    QuadratureConfig,
    quadrature_nodes_weights,
)
from .problem import ProblemData, validate_assumptions

__all__ = [
    "SpectralCoefficients",
    "StabilityBounds",
    "SpectralDiagnostics",
    "compute_coefficients",
    "forward_solve",
    "apply_P",
    "stability_bounds",
    "solve_inverse_spectral",
]

DENOMINATOR_FLOOR = 1e-12


class SpectralCoefficients:
    """Projections of the initial state and the source onto the adjoint family.

    ``phi[i]`` is the coefficient of basis member i (i = 0..2K);
    ``source_table(tvals)`` returns the matrix F_i(t) of source projections,
    cached per time grid since the fixed-point iteration reuses it heavily.
    """

    def __init__(self, K: int, phi: np.ndarray, source, x_quad: QuadratureConfig):
        if K < 1:
            raise UsageError("truncation K must be >= 1")
        self.K = K
        self.phi = np.asarray(phi, dtype=float)
        if self.phi.shape != (2 * K + 1,):
            raise UsageError("phi coefficient vector must have length 2K+1")
        self.source = source
        self.x_quad = x_quad
        nodes, w = quadrature_nodes_weights(0.0, 1.0, x_quad)
        self._nodes = nodes
        self._yw = basis_matrix_y(2 * K + 1, nodes) * w     # (2K+1, nx)
        self._cache: dict[bytes, np.ndarray] = {}

    def source_table(self, tvals: np.ndarray) -> np.ndarray:
        """F_i(t) for every basis index i and every t in tvals; shape (2K+1, nt)."""
        tvals = np.asarray(tvals, dtype=float)
        key = tvals.tobytes()
        if key not in self._cache:
            fvals = self._eval_source(tvals)                # (nt, nx)
            self._cache[key] = (fvals @ self._yw.T).T       # (2K+1, nt)
        return self._cache[key]

    def _eval_source(self, tvals):
        try:
            out = np.asarray(self.source(self._nodes[None, :], tvals[:, None]), dtype=float)
            if out.shape == (tvals.size, self._nodes.size):
                return out
        except (TypeError, ValueError):
            pass
        return np.array([np.asarray(self.source(self._nodes, t), dtype=float) for t in tvals])

    def tail_estimate(self) -> float:
        """Crude bound on the dropped part of sum_k |8 pi k phi_2k|.

        Fits the decay rate of the last eight computed terms and
        extrapolates; returns 0 when they already sit at roundoff.
        """
        k = np.arange(1, self.K + 1)
        terms = np.abs(8 * np.pi * k * self.phi[2::2])
        tail = terms[-8:] if terms.size >= 8 else terms
        kk = k[-tail.size:]
        scale = max(1.0, float(terms.max())) if terms.size else 1.0
        if np.all(tail < 1e-14 * scale):
            return 0.0
        pos = tail > 0
        if pos.sum() >= 2:
            p = -np.polyfit(np.log(kk[pos]), np.log(tail[pos]), 1)[0]
            if p > 1:
                return float(tail[-1] * self.K / (p - 1))
        return float(tail.sum())


def compute_coefficients(
    problem: ProblemData, K: int = 64, x_quad: QuadratureConfig = DEFAULT_X_QUAD
) -> SpectralCoefficients:
    nodes, w = quadrature_nodes_weights(0.0, 1.0, x_quad)
    yw = basis_matrix_y(2 * K + 1, nodes) * w
    phi_vals = np.asarray(problem.phi(nodes), dtype=float)
    phi = yw @ phi_vals
    return SpectralCoefficients(K, phi, problem.source, x_quad)


def _duhamel(g_nodes, g_mid, decay, half_decay, dt):
    """Stepwise-accumulated int_0^{t_j} g(s) e^{-lam (W_j - W(s))} ds.

    g_nodes/g_mid: (modes, nt) and (modes, nt-1) samples; decay/half_decay:
    per-step kernel factors over the full and half step.  Vectorized over
    modes, sequential over time (the recursion is inherently so).
    """
    n_modes, nt = g_nodes.shape
    D = np.zeros((n_modes, nt))
    for j in range(nt - 1):
        step = dt[j] / 6.0 * (
            g_nodes[:, j] * decay[:, j] + 4.0 * g_mid[:, j] * half_decay[:, j] + g_nodes[:, j + 1]
        )
        D[:, j + 1] = D[:, j] * decay[:, j] + step
    return D


class _ModeWork:
    """Shared kernel tables for one (trajectory, time grid) combination."""

    def __init__(self, a: CoefficientTrajectory, coeffs: SpectralCoefficients, tvals: np.ndarray):
        self.tvals = np.asarray(tvals, dtype=float)
        self.dt = np.diff(self.tvals)
        if np.any(self.dt <= 0):
            raise UsageError("time grid must be strictly increasing")
        self.mid = 0.5 * (self.tvals[:-1] + self.tvals[1:])
        self.W = a.cumulative_at(self.tvals)
        self.Wmid = a.cumulative_at(self.mid)
        self.K = coeffs.K
        self.lam = (2.0 * np.pi * np.arange(1, self.K + 1)) ** 2   # (K,)
        with np.errstate(under="ignore"):
            self.decay = np.exp(-self.lam[:, None] * (self.W[1:] - self.W[:-1]))
            self.half = np.exp(-self.lam[:, None] * (self.W[1:] - self.Wmid))
            self.expW = np.exp(-self.lam[:, None] * self.W[None, :])
        self.F = coeffs.source_table(self.tvals)      # (2K+1, nt)
        self.Fmid = coeffs.source_table(self.mid)     # (2K+1, nt-1)

    def even_modes(self, coeffs: SpectralCoefficients) -> np.ndarray:
        """u_2k(t) for k = 1..K; shape (K, nt)."""
        with np.errstate(under="ignore"):
            D = _duhamel(self.F[2::2], self.Fmid[2::2], self.decay, self.half, self.dt)
            return coeffs.phi[2::2, None] * self.expW + D

    def odd_modes(self, coeffs: SpectralCoefficients, even_duhamel=None) -> np.ndarray:
        """u_{2k-1}(t) for k = 1..K; shape (K, nt)."""
        kvec = np.arange(1, self.K + 1)[:, None]
        phi_odd = coeffs.phi[1::2][:, None]
        phi_even = coeffs.phi[2::2][:, None]
        with np.errstate(under="ignore"):
            D_odd = _duhamel(self.F[1::2], self.Fmid[1::2], self.decay, self.half, self.dt)
            D_even = (
                even_duhamel
                if even_duhamel is not None
                else _duhamel(self.F[2::2], self.Fmid[2::2], self.decay, self.half, self.dt)
            )
            D_evenW = _duhamel(
                self.F[2::2] * self.W[None, :],
                self.Fmid[2::2] * self.Wmid[None, :],
                self.decay,
                self.half,
                self.dt,
            )
            secular = (phi_odd - 4.0 * np.pi * kvec * phi_even * self.W[None, :]) * self.expW
            return secular + D_odd - 4.0 * np.pi * kvec * (self.W[None, :] * D_even - D_evenW)

    def zero_mode(self, coeffs: SpectralCoefficients) -> np.ndarray:
        """u_0(t) = phi_0 + prefix integral of F_0 (no diffusivity enters)."""
        ones = np.ones((1, self.tvals.size - 1))
        D = _duhamel(self.F[0:1], self.Fmid[0:1], ones, ones, self.dt)
        return coeffs.phi[0] + D[0]


def mode_trajectories(
    a: CoefficientTrajectory, coeffs: SpectralCoefficients, tvals
) -> np.ndarray:
    """All mode amplitudes u_i(t), i = 0..2K, on ``tvals``; shape (2K+1, nt)."""
    work = _ModeWork(a, coeffs, np.asarray(tvals, dtype=float))
    out = np.empty((2 * coeffs.K + 1, work.tvals.size))
    out[0] = work.zero_mode(coeffs)
    out[2::2] = work.even_modes(coeffs)
    out[1::2] = work.odd_modes(coeffs)
    return out


def forward_solve(
    a: CoefficientTrajectory,
    coeffs: SpectralCoefficients,
    x_grid,
    t_grid,
    provenance: str = "spectral",
) -> TemperatureField:
    """Evaluate the truncated series solution on the requested grid.

    The diffusivity enters only through its prefix integral, evaluated
    exactly for the piecewise-linear trajectory; accuracy in time is set
    by the resolution of ``t_grid``.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    modes = mode_trajectories(a, coeffs, t_grid)
    X = basis_matrix_x(2 * coeffs.K + 1, x_grid)
    return TemperatureField(x=x_grid, t=t_grid, values=modes.T @ X, provenance=provenance)


def apply_P(
    a: CoefficientTrajectory,
    coeffs: SpectralCoefficients,
    eprime,
) -> CoefficientTrajectory:
    """One application of the fixed-point operator, sampled on a's grid.

    ``eprime`` evaluates the derivative of the measured energy.  Raises
    DegenerateProblemError when the denominator series falls below the
    positive floor (empty or decayed even spectrum: the data cannot see
    the diffusivity).
    """
    tvals = a.grid
    work = _ModeWork(a, coeffs, tvals)
    u_even = work.even_modes(coeffs)                       # (K, nt)
    kvec = np.arange(1, coeffs.K + 1)
    denom = (8.0 * np.pi * kvec) @ u_even
    if np.min(denom) <= DENOMINATOR_FLOOR:
        j = int(np.argmin(denom))
        raise DegenerateProblemError(
            f"identification denominator {denom[j]:.3e} at t={tvals[j]:.6g} "
            f"is below the positive floor"
        )
    F = work.F
    numer = 2.0 * F[0] + (2.0 / (np.pi * kvec)) @ F[2::2] - np.asarray(eprime(tvals), dtype=float)
    return CoefficientTrajectory(tvals, numer / denom)


@dataclass
class StabilityBounds:
    """Bounds and uniqueness horizon derived from the problem data.

    ``lo``/``hi`` delimit the band every admissible diffusivity (and every
    fixed-point image) must occupy; ``t0`` is the horizon up to which the
    fixed point is provably unique (contraction with factor ``alpha``).
    """

    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    alpha: float
    T: float
    t0: float

    @property
    def lo(self) -> float:
        return self.c0 / self.c3

    @property
    def hi(self) -> float:
        return self.c1 / self.c2

    @property
    def uniqueness_certified(self) -> bool:
        return self.T <= self.t0


def stability_bounds(
    coeffs: SpectralCoefficients,
    energy,
    T: float,
    alpha: float = 0.9,
    t_quad: QuadratureConfig = DEFAULT_T_QUAD,
) -> StabilityBounds:
    """Compute the admissible band and the uniqueness horizon.

    Raises AssumptionViolationError naming the first non-positive constant
    among the four that must be positive under the solvability assumptions.
    """
    if not 0 < alpha < 1:
        raise UsageError("alpha must lie in (0, 1)")
    tnodes, tw = quadrature_nodes_weights(0.0, T, t_quad)
    F = coeffs.source_table(tnodes)                        # (2K+1, nt)
    kvec = np.arange(1, coeffs.K + 1)
    f0 = F[0]
    series = (2.0 / (np.pi * kvec)) @ F[2::2]              # sum 2/(pi k) F_2k(t)
    ep = np.asarray(energy.derivative(tnodes), dtype=float)
    phi_even = coeffs.phi[2::2]

    c0 = 2.0 * f0.min() + series.min() - ep.max()
    c1 = 2.0 * f0.max() + series.max() - ep.min()
    c2 = float(tw @ ep) + float((2.0 / (np.pi * kvec)) @ phi_even) - 2.0 * float(tw @ f0)
    int_f_even = F[2::2] @ tw
    c3 = float((8.0 * np.pi * kvec) @ (phi_even + int_f_even))
    c4 = float((4.0 * (2.0 * np.pi * kvec) ** 3) @ phi_even)
    c5 = float((4.0 * (2.0 * np.pi * kvec) ** 3) @ int_f_even)
    c6 = float(np.max((8.0 * np.pi * kvec) @ F[2::2]))

    for name, val in (("C0", c0), ("C1", c1), ("C2", c2), ("C3", c3)):
        if not val > 0:
            raise AssumptionViolationError(
                f"stability constant {name} = {val:.6g} is not positive", clauses=(name,)
            )
    growth = c1 * (c4 + c5)
    t0 = T if growth <= 0 else min(T, alpha * c2 * c2 / growth)
    return StabilityBounds(c0, c1, c2, c3, c4, c5, c6, alpha, T, t0)


@dataclass
class SpectralDiagnostics:
    iterations: int
    residual: float
    residual_history: list
    theta_final: float
    bounds: StabilityBounds
    uniqueness_certified: bool
    phi_tail: float
    warnings: list = field(default_factory=list)


def solve_inverse_spectral(
    problem: ProblemData,
    K: int = 64,
    x_quad: QuadratureConfig = DEFAULT_X_QUAD,
    tol: float = 1e-6,
    max_iter: int = 1000,
    *,
    n_time: int = 512,
    n_space: int = 101,
    alpha: float = 0.9,
    theta: float = 1.0,
    force: bool = False,
    initial_guess: CoefficientTrajectory | None = None,
):
    """Recover (a, u) by Picard iteration on a = P[a].

    Starts from the constant midpoint of the admissible band and iterates
    a <- a + theta (P[a] - a) until the sup-norm residual drops under
    ``tol``.  The damping factor stays at ``theta`` (default 1) unless the
    residual grows well past its best value; transient residual growth is
    normal for this operator (it has Volterra memory: corrections sweep
    forward from t = 0, where P is exact, so the sup-norm can stall before
    collapsing), which is why damping is not reduced on a mere increase.

    Returns (a, u, SpectralDiagnostics).  Raises AssumptionViolationError
    when validation fails and ``force`` is not set, NonConvergenceError
    (carrying the residual history) when the budget runs out.
    """
    warnings = []
    report = validate_assumptions(problem, k_max=min(K, 64), quad=x_quad)
    if not report.passed:
        names = [c.name for c in report.failures]
        if not force:
            raise AssumptionViolationError(
                "assumptions fail: " + ", ".join(names) + " (pass force=True to override)",
                clauses=names,
            )
        warnings.append(f"assumption override: proceeding despite {', '.join(names)}")

    coeffs = compute_coefficients(problem, K, x_quad)
    bounds = stability_bounds(coeffs, problem.energy, problem.T, alpha=alpha)
    grid = np.linspace(0.0, problem.T, n_time + 1)
    if initial_guess is not None:
        a = CoefficientTrajectory(grid, np.asarray(initial_guess(grid), dtype=float))
    else:
        a = CoefficientTrajectory(grid, np.full(grid.size, 0.5 * (bounds.lo + bounds.hi)))

    eprime = problem.energy.derivative
    history = []
    best = np.inf
    converged = False
    for iteration in range(1, max_iter + 1):
        P = apply_P(a, coeffs, eprime)
        residual = float(np.max(np.abs(P.values - a.values)))
        history.append(residual)
        if residual <= tol:
            a = P
            converged = True
            break
        if residual > 4.0 * best and theta > 1.0 / 16.0:
            theta = max(theta / 2.0, 1.0 / 16.0)
            warnings.append(f"iteration {iteration}: sustained growth, damping halved to {theta}")
        best = min(best, residual)
        a = a.with_values(a.values + theta * (P.values - a.values))
    if not converged:
        raise NonConvergenceError(
            f"fixed-point iteration did not reach tol={tol} in {max_iter} iterations "
            f"(last residual {history[-1]:.3e})",
            history=history,
        )

    u = forward_solve(a, coeffs, np.linspace(0.0, 1.0, n_space), grid)
    diag = SpectralDiagnostics(
        iterations=iteration,
        residual=history[-1],
        residual_history=history,
        theta_final=theta,
        bounds=bounds,
        uniqueness_certified=bounds.uniqueness_certified,
        phi_tail=coeffs.tail_estimate(),
        warnings=warnings,
    )
    return a, u, diag
