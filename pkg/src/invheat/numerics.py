"""Shared numerical kernels.

Composite quadrature on an interval, piecewise-linear interpolation of
sampled trajectories, and a direct solver for the bordered tridiagonal
systems produced by the Crank-Nicolson march (tridiagonal plus a single
top-right corner entry and a doubled sub-diagonal entry in the last row).

Everything here is pure: no internal mutable state, safe to call
concurrently on shared inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, OutOfDomainError, SingularMatrixError, UsageError

__all__ = [
    "QuadratureConfig",
    "integrate",
    "quadrature_nodes_weights",
    "interpolate",
    "BorderedTridiagonalMatrix",
    "solve_bordered",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite quadrature rule: 'trapezoid' or 'simpson', on equal panels."""

    rule: str = "simpson"
    panels: int = 512

    def __post_init__(self):
        if self.rule not in ("trapezoid", "simpson"):
            raise UsageError(f"unknown quadrature rule {self.rule!r}")
        if self.panels < 2:
            raise UsageError("quadrature needs at least 2 panels")
        if self.rule == "simpson" and self.panels % 2 != 0:
            raise UsageError("composite Simpson needs an even panel count")


# spec'd defaults: space integrals resolve the C^4 data to ~1e-8,
# time integrals may be coarser (integrands are smoother in t)
DEFAULT_X_QUAD = QuadratureConfig("simpson", 512)
DEFAULT_T_QUAD = QuadratureConfig("simpson", 256)


def quadrature_nodes_weights(lo: float, hi: float, cfg: QuadratureConfig):
    """Nodes and weights so that integral ~= weights @ f(nodes)."""
    n = cfg.panels
    nodes = np.linspace(lo, hi, n + 1)
    h = (hi - lo) / n
    if cfg.rule == "trapezoid":
        w = np.full(n + 1, h)
        w[0] = w[-1] = h / 2
    else:
        w = np.empty(n + 1)
        w[0] = w[-1] = h / 3
        w[1:-1:2] = 4 * h / 3
        w[2:-1:2] = 2 * h / 3
    return nodes, w


def _evaluate(f, nodes: np.ndarray) -> np.ndarray:
    # non-finite results are diagnosed after the fact, so suppress the
    # intermediate floating-point warnings here
    with np.errstate(all="ignore"):
        try:
            vals = np.asarray(f(nodes), dtype=float)
            if vals.shape != nodes.shape:
                raise TypeError
        except (TypeError, ValueError):
            vals = np.array([float(f(x)) for x in nodes])
    return vals


def integrate(f, lo: float, hi: float, cfg: QuadratureConfig = DEFAULT_X_QUAD) -> float:
    """Composite-rule approximation of the integral of ``f`` on [lo, hi].

    ``f`` may be scalar-only or vectorized over numpy arrays.  Error is
    O(panels^-2) for the trapezoid rule and O(panels^-4) for Simpson on
    smooth integrands.

    Raises
    ------
    EvaluationError
        if ``f`` returns a non-finite value; carries the offending node.
    UsageError
        if lo >= hi.
    """
    if not lo < hi:
        raise UsageError(f"integration needs lo < hi, got [{lo}, {hi}]")
    nodes, w = quadrature_nodes_weights(lo, hi, cfg)
    vals = _evaluate(f, nodes)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise EvaluationError("non-finite integrand value", where=float(nodes[bad.argmax()]))
    return float(w @ vals)


def interpolate(ts, vs, t):
    """Piecewise-linear interpolant through (ts, vs), exact at the nodes.

    ``ts`` must be strictly increasing; ``t`` (scalar or array) must lie
    inside [ts[0], ts[-1]] or OutOfDomainError is raised.
    """
    ts = np.asarray(ts, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2:
        raise UsageError("need matching 1-D abscissae/values with >= 2 samples")
    if not np.all(np.diff(ts) > 0):
        raise UsageError("abscissae must be strictly increasing")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < ts[0]) or np.any(t_arr > ts[-1]):
        raise OutOfDomainError(
            f"interpolation point outside [{ts[0]}, {ts[-1]}]"
        )
    out = np.interp(t_arr, ts, vs)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


@dataclass(frozen=True)
class BorderedTridiagonalMatrix:
    """Tridiagonal matrix with one extra top-right corner entry.

    The Crank-Nicolson system of this package is the special case
    main = -2(1+R), sub = (1,...,1,2), sup = 1, corner = 1; the doubled
    last sub-diagonal entry comes from folding the fictitious mirror
    point into the last row, and the corner from the wrap u_0 = u_M.
    """

    main: np.ndarray
    sub: np.ndarray
    sup: np.ndarray
    corner: float

    def __post_init__(self):
        main = np.asarray(self.main, dtype=float)
        sub = np.asarray(self.sub, dtype=float)
        sup = np.asarray(self.sup, dtype=float)
        object.__setattr__(self, "main", main)
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "sup", sup)
        if main.size < 3:
            raise UsageError("bordered system needs dimension >= 3")
        if sub.size != main.size - 1 or sup.size != main.size - 1:
            raise UsageError("off-diagonals must have length dimension-1")

    @property
    def dimension(self) -> int:
        return self.main.size

    @classmethod
    def crank_nicolson(cls, dimension: int, R: float) -> "BorderedTridiagonalMatrix":
        sub = np.ones(dimension - 1)
        sub[-1] = 2.0
        return cls(
            main=np.full(dimension, -2.0 * (1.0 + R)),
            sub=sub,
            sup=np.ones(dimension - 1),
            corner=1.0,
        )

    def dense(self) -> np.ndarray:
        M = self.dimension
        A = np.zeros((M, M))
        np.fill_diagonal(A, self.main)
        i = np.arange(M - 1)
        A[i + 1, i] = self.sub
        A[i, i + 1] = self.sup
        A[0, M - 1] += self.corner
        return A

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.main * x
        y[:-1] += self.sup * x[1:]
        y[1:] += self.sub * x[:-1]
        y[0] += self.corner * x[-1]
        return y


def solve_bordered(A: BorderedTridiagonalMatrix, b) -> np.ndarray:
    """Gaussian elimination with partial pivoting, banded-plus-spike storage.

    The last column (holding the corner) is carried as a dense spike; the
    band can pick up one extra super-diagonal of fill from row swaps, so
    work and storage stay O(M).

    Raises SingularMatrixError (with the pivot index) on a zero or
    below-threshold pivot.
    """
    b = np.asarray(b, dtype=float)
    M = A.dimension
    if b.shape != (M,):
        raise UsageError(f"rhs length {b.shape} does not match dimension {M}")

    lo = A.sub.copy()          # lo[r]: entry at (r+1, r)
    d = A.main.copy()          # d[r]:  entry at (r, r), band columns only
    up = A.sup.copy()          # up[r]: entry at (r, r+1) while r+1 <= M-2
    u2 = np.zeros(M)           # u2[r]: fill-in at (r, r+2) while r+2 <= M-2
    sp = np.zeros(M)           # sp[r]: entry at (r, M-1), the spike column
    x = b.copy()

    sp[0] += A.corner
    sp[M - 2] = A.sup[M - 2]
    sp[M - 1] = A.main[M - 1]
    up[M - 2] = 0.0
    scale = max(
        np.max(np.abs(A.main)),
        np.max(np.abs(A.sub)),
        np.max(np.abs(A.sup)),
        abs(A.corner),
        1e-300,
    )
    threshold = 1e-14 * scale

    for c in range(M - 1):
        p0, q0 = d[c], lo[c]
        p1 = up[c] if c + 1 <= M - 2 else 0.0
        q1 = d[c + 1] if c + 1 <= M - 2 else 0.0
        p2 = u2[c] if c + 2 <= M - 2 else 0.0
        q2 = up[c + 1] if c + 2 <= M - 2 else 0.0
        pS, qS = sp[c], sp[c + 1]
        if abs(q0) > abs(p0):
            p0, q0, p1, q1, p2, q2, pS, qS = q0, p0, q1, p1, q2, p2, qS, pS
            x[c], x[c + 1] = x[c + 1], x[c]
        if abs(p0) <= threshold:
            raise SingularMatrixError(c, p0)
        m = q0 / p0
        q1 -= m * p1
        q2 -= m * p2
        qS -= m * pS
        x[c + 1] -= m * x[c]
        d[c] = p0
        sp[c], sp[c + 1] = pS, qS
        if c + 1 <= M - 2:
            up[c] = p1
            d[c + 1] = q1
        if c + 2 <= M - 2:
            u2[c] = p2
            up[c + 1] = q2

    if abs(sp[M - 1]) <= threshold:
        raise SingularMatrixError(M - 1, sp[M - 1])
    x[M - 1] /= sp[M - 1]
    for r in range(M - 2, -1, -1):
        acc = x[r] - sp[r] * x[M - 1]
        if r + 1 <= M - 2:
            acc -= up[r] * x[r + 1]
        if r + 2 <= M - 2:
            acc -= u2[r] * x[r + 2]
        x[r] = acc / d[r]
    return x
