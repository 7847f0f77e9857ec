"""Problem-instance data model, the problem-file parser, and the
solvability-assumption validator.

A problem file is UTF-8 text with ``key = expression`` lines and ``#``
comments.  Required keys: ``phi`` (initial temperature, in x), ``F``
(source, in x and t), ``E`` (measured energy, in t), ``T`` (horizon,
a constant).  Optional: ``exact_a`` (in t) and ``exact_u`` (in x and t)
for validation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import basis_matrix_y, project
from .errors import AssumptionViolationError, ExpressionError, UsageError
from .expressions import Expression, parse_expression
from .numerics import (
    DEFAULT_T_QUAD,
    DEFAULT_X_QUAD,
    QuadratureConfig,
    integrate,
    quadrature_nodes_weights,
)

__all__ = [
    "ScalarField1D",
    "TimeSignal",
    "SourceField",
    "ProblemData",
    "AssumptionReport",
    "ClauseResult",
    "parse_problem",
    "load_problem",
    "validate_assumptions",
]

COMPAT_TOL = 1e-6      # compatibility equalities hold exactly on paper; this
                       # is the floating-point band
SIGN_TOL = 1e-9        # quadrature noise allowance on sign conditions


def _match_shape(out, shape):
    """Broadcast a scalar result (constant expression) to the input shape."""
    if np.ndim(out) == 0 and shape:
        return np.full(shape, float(out))
    return out


def _xt_shape(x, t):
    return np.broadcast_shapes(np.shape(x), np.shape(t))


def _fd_derivative(fn, t, lo, hi, order=1):
    """4th-order five-point first derivative, one-sided near the ends."""
    if order != 1:
        raise UsageError("finite differences implemented for first order only")
    t = np.asarray(t, dtype=float)
    h = max(1e-6, 1e-6 * (hi - lo))
    # pick the stencil that stays inside [lo, hi]
    def d(ti):
        if ti - 2 * h >= lo and ti + 2 * h <= hi:
            return (fn(ti - 2 * h) - 8 * fn(ti - h) + 8 * fn(ti + h) - fn(ti + 2 * h)) / (12 * h)
        if ti + 4 * h <= hi:
            return (
                -25 * fn(ti) + 48 * fn(ti + h) - 36 * fn(ti + 2 * h)
                + 16 * fn(ti + 3 * h) - 3 * fn(ti + 4 * h)
            ) / (12 * h)
        return (
            25 * fn(ti) - 48 * fn(ti - h) + 36 * fn(ti - 2 * h)
            - 16 * fn(ti - 3 * h) + 3 * fn(ti - 4 * h)
        ) / (12 * h)

    if t.ndim == 0:
        return float(d(float(t)))
    return np.array([d(float(ti)) for ti in t])


class ScalarField1D:
    """Function of x on [0, 1] with derivative evaluators up to order 4.

    Expression-backed fields differentiate analytically; callable-backed
    fields fall back to finite differences.
    """

    def __init__(self, value, expression: Expression | None = None):
        self._value = value
        self._expr = expression
        self._derivs = {}

    @classmethod
    def from_expression(cls, expr: Expression) -> "ScalarField1D":
        return cls(lambda x: _match_shape(expr(x=x), np.shape(x)), expression=expr)

    def __call__(self, x):
        return self._value(x)

    def derivative(self, order: int = 1):
        if not 1 <= order <= 4:
            raise UsageError("derivatives supported up to order 4")
        if order not in self._derivs:
            if self._expr is not None:
                e = self._expr
                for _ in range(order):
                    e = e.diff("x")
                self._derivs[order] = lambda x, _e=e: _match_shape(_e(x=x), np.shape(x))
            else:
                lower = self._value if order == 1 else self.derivative(order - 1)
                self._derivs[order] = lambda x, _f=lower: _fd_derivative(_f, x, 0.0, 1.0)
        return self._derivs[order]

    @property
    def expression(self):
        return self._expr


class TimeSignal:
    """Function of t on [0, T] together with its first derivative."""

    def __init__(self, value, derivative=None, expression: Expression | None = None, T=None):
        self._value = value
        self._expr = expression
        self.T = T
        if derivative is not None:
            self._derivative = derivative
        elif expression is not None:
            de = expression.diff("t")
            self._derivative = lambda t, _e=de: _match_shape(_e(t=t), np.shape(t))
        else:
            hi = T if T is not None else 1.0
            self._derivative = lambda t, _f=value, _hi=hi: _fd_derivative(_f, t, 0.0, _hi)

    @classmethod
    def from_expression(cls, expr: Expression, T=None) -> "TimeSignal":
        return cls(lambda t: _match_shape(expr(t=t), np.shape(t)), expression=expr, T=T)

    def __call__(self, t):
        return self._value(t)

    def derivative(self, t):
        return self._derivative(t)

    @property
    def expression(self):
        return self._expr


class SourceField:
    """Function of (x, t) on [0, 1] x [0, T] with x-derivatives up to order 4."""

    def __init__(self, value, expression: Expression | None = None):
        self._value = value
        self._expr = expression
        self._xderivs = {}

    @classmethod
    def from_expression(cls, expr: Expression) -> "SourceField":
        return cls(
            lambda x, t: _match_shape(expr(x=x, t=t), _xt_shape(x, t)),
            expression=expr,
        )

    def __call__(self, x, t):
        return self._value(x, t)

    def x_derivative(self, order: int = 1):
        if not 1 <= order <= 4:
            raise UsageError("x-derivatives supported up to order 4")
        if order not in self._xderivs:
            if self._expr is not None:
                e = self._expr
                for _ in range(order):
                    e = e.diff("x")
                self._xderivs[order] = lambda x, t, _e=e: _match_shape(
                    _e(x=x, t=t), _xt_shape(x, t)
                )
            else:
                lower = (
                    self._value if order == 1
                    else self._xderivs.get(order - 1) or self.x_derivative(order - 1)
                )
                self._xderivs[order] = lambda x, t, _f=lower: _fd_derivative(
                    lambda xx: _f(xx, t), x, 0.0, 1.0
                )
        return self._xderivs[order]

    @property
    def expression(self):
        return self._expr


@dataclass
class ProblemData:
    """One inverse-problem instance: initial state, source, measured energy,
    horizon, and (optionally) a known exact pair for validation runs."""

    phi: ScalarField1D
    source: SourceField
    energy: TimeSignal
    T: float
    exact_a: TimeSignal | None = None
    exact_u: SourceField | None = None

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise UsageError(f"horizon T must be positive, got {self.T}")

    @property
    def has_exact(self) -> bool:
        return self.exact_a is not None and self.exact_u is not None


_KEYS = {
    "phi": ("x",),
    "F": ("x", "t"),
    "E": ("t",),
    "T": (),
    "exact_a": ("t",),
    "exact_u": ("x", "t"),
}
_REQUIRED = ("phi", "F", "E", "T")


def parse_problem(text: str) -> ProblemData:
    """Parse problem-file text into a ProblemData.

    Raises ExpressionError for in-line syntax/identifier problems (with the
    offset inside the line) and UsageError for structural ones (missing or
    duplicate keys, non-positive horizon).
    """
    entries: dict[str, Expression] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected 'key = expression'")
        key_part, expr_part = line.split("=", 1)
        key = key_part.strip()
        if key not in _KEYS:
            raise UsageError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise UsageError(f"line {lineno}: duplicate key {key!r}")
        offset = len(key_part) + 1 + (len(expr_part) - len(expr_part.lstrip()))
        expr_text = expr_part.strip()
        if not expr_text:
            raise UsageError(f"line {lineno}: empty expression for {key!r}")
        try:
            entries[key] = parse_expression(expr_text, variables=_KEYS[key], offset=offset)
        except ExpressionError as exc:
            err = ExpressionError(f"line {lineno}: {exc.args[0]}")
            err.position = exc.position
            raise err from exc

    missing = [k for k in _REQUIRED if k not in entries]
    if missing:
        raise UsageError(f"missing required key(s): {', '.join(missing)}")

    T = float(entries["T"]())
    if not (np.isfinite(T) and T > 0):
        raise UsageError(f"horizon T must be positive, got {T}")

    problem = ProblemData(
        phi=ScalarField1D.from_expression(entries["phi"]),
        source=SourceField.from_expression(entries["F"]),
        energy=TimeSignal.from_expression(entries["E"], T=T),
        T=T,
        exact_a=(
            TimeSignal.from_expression(entries["exact_a"], T=T) if "exact_a" in entries else None
        ),
        exact_u=SourceField.from_expression(entries["exact_u"]) if "exact_u" in entries else None,
    )
    return problem


def load_problem(path) -> ProblemData:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem(fh.read())


@dataclass
class ClauseResult:
    name: str
    status: str               # 'pass' | 'fail' | 'checked-to-truncation'
    witness: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass
class AssumptionReport:
    clauses: list

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.clauses)

    @property
    def failures(self) -> list:
        return [c for c in self.clauses if not c.ok]

    def __iter__(self):
        return iter(self.clauses)

    def render(self) -> str:
        lines = []
        for c in self.clauses:
            wit = ", ".join(f"{k}={_fmt(v)}" for k, v in c.witness.items())
            lines.append(f"{c.name:<6} {c.status:<22} {wit}")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def validate_assumptions(
    problem: ProblemData,
    k_max: int = 64,
    quad: QuadratureConfig = DEFAULT_X_QUAD,
    n_t_samples: int = 101,
) -> AssumptionReport:
    """Check the solvability assumptions and report per-clause results.

    Monotone energy (the measured energy must strictly decrease), the
    compatibility equalities tying phi, F and E together at the boundary,
    and the sign conditions on the even-coefficient spectra.  Sign
    conditions involve infinitely many coefficients; they are checked up
    to ``k_max`` and reported as 'checked-to-truncation' when clean
    (coefficients of C^4 data decay fast enough that higher violations
    would sit below quadrature noise anyway).

    Violations are report entries, not exceptions.
    """
    if k_max < 1:
        raise UsageError("k_max must be >= 1")
    p = problem
    T = p.T
    clauses = []

    # A1: energy strictly decreasing
    ts = np.linspace(0.0, T, n_t_samples)
    ep = np.asarray(p.energy.derivative(ts), dtype=float)
    worst = int(np.argmax(ep))
    clauses.append(
        ClauseResult(
            "A1",
            "pass" if np.all(ep < 0) else "fail",
            {"max_Eprime": float(ep[worst]), "at_t": float(ts[worst])},
        )
    )

    # A2(1): compatibility of the initial state with the boundary operator
    # and with the measured energy at t = 0
    phi = p.phi
    d1, d2 = phi.derivative(1), phi.derivative(2)
    eq = {
        "phi(0)-phi(1)": float(phi(0.0) - phi(1.0)),
        "phi'(1)": float(d1(1.0)),
        "phi''(0)-phi''(1)": float(d2(0.0) - d2(1.0)),
        "int(phi)-E(0)": float(integrate(phi, 0.0, 1.0, quad) - p.energy(0.0)),
    }
    bad = {k: v for k, v in eq.items() if abs(v) > COMPAT_TOL}
    clauses.append(ClauseResult("A2(1)", "fail" if bad else "pass", bad or eq))

    # A2(2): even projections of the initial state are nonnegative
    phi_even = np.array([project(phi, 2 * k, quad) for k in range(1, k_max + 1)])
    scale = max(1.0, float(np.max(np.abs(phi_even))) if phi_even.size else 1.0)
    kmin = int(np.argmin(phi_even))
    clauses.append(
        ClauseResult(
            "A2(2)",
            "checked-to-truncation" if phi_even.min() >= -SIGN_TOL * scale else "fail",
            {"min_phi_2k": float(phi_even.min()), "at_k": kmin + 1, "k_max": k_max},
        )
    )

    # A3(1): the source satisfies the same boundary compatibility at each time
    F = p.source
    fx, fxx = F.x_derivative(1), F.x_derivative(2)
    tsamp = np.linspace(0.0, T, 41)
    vals = {
        "max|F(0,t)-F(1,t)|": float(np.max(np.abs(F(0.0, tsamp) - F(1.0, tsamp)))),
        "max|Fx(1,t)|": float(np.max(np.abs(fx(1.0, tsamp)))),
        "max|Fxx(0,t)-Fxx(1,t)|": float(np.max(np.abs(fxx(0.0, tsamp) - fxx(1.0, tsamp)))),
    }
    bad = {k: v for k, v in vals.items() if v > COMPAT_TOL}
    clauses.append(ClauseResult("A3(1)", "fail" if bad else "pass", bad or vals))

    # A3(2): even source projections nonnegative, plus the scalar inequality
    # int E' + sum (2/(pi k)) phi_2k - 2 int F0 > 0 (with its numeric margin)
    nodes, w = quadrature_nodes_weights(0.0, 1.0, quad)
    y_even = basis_matrix_y(2 * k_max + 1, nodes)[0::2]      # rows: Y_0, Y_2, Y_4, ...
    fmat = _source_on_nodes(F, nodes, tsamp)                 # (nt, nx)
    proj = fmat @ (y_even * w).T                             # (nt, k_max+1): F_0, F_2, ...
    f_even = proj[:, 1:]
    f0_vals = proj[:, 0]
    fscale = max(1.0, float(np.max(np.abs(proj))))
    min_even = float(min(f_even.min() if f_even.size else 0.0, f0_vals.min()))
    tq = QuadratureConfig(DEFAULT_T_QUAD.rule, DEFAULT_T_QUAD.panels)
    int_eprime = integrate(lambda t: p.energy.derivative(t), 0.0, T, tq)
    int_f0 = integrate(lambda t: _f0_of_t(F, t, nodes, w), 0.0, T, tq)
    series = float(np.sum([2.0 / (np.pi * k) * phi_even[k - 1] for k in range(1, k_max + 1)]))
    margin = int_eprime + series - 2.0 * int_f0
    ok_sign = min_even >= -SIGN_TOL * fscale
    ok_margin = margin > 0
    clauses.append(
        ClauseResult(
            "A3(2)",
            "checked-to-truncation" if (ok_sign and ok_margin) else "fail",
            {"min_F_2k": min_even, "margin": float(margin), "k_max": k_max},
        )
    )

    return AssumptionReport(clauses)


def _source_on_nodes(F, nodes, tsamp):
    try:
        out = np.asarray(F(nodes[None, :], tsamp[:, None]), dtype=float)
        if out.shape == (tsamp.size, nodes.size):
            return out
    except (TypeError, ValueError):
        pass
    return np.array([np.asarray(F(nodes, t), dtype=float) for t in tsamp])


def _f0_of_t(F, t, nodes, w):
    return float((np.asarray(F(nodes, t), dtype=float) * nodes) @ w)


def require_assumptions(problem: ProblemData, k_max: int = 64) -> AssumptionReport:
    """Validate and raise AssumptionViolationError on any failing clause."""
    report = validate_assumptions(problem, k_max=k_max)
    if not report.passed:
        names = [c.name for c in report.failures]
        raise AssumptionViolationError(
            "problem data violate solvability assumptions: " + ", ".join(names),
            clauses=names,
        )
    return report
