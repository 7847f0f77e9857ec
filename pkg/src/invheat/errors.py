"""Exception hierarchy shared by all invheat modules."""


class InvheatError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(InvheatError):
    """Bad input from the caller: malformed files, impossible grids, etc."""


class ExpressionError(UsageError):
    """Syntax or semantic error in a problem expression.

    ``position`` is the 0-based offset of the offending character within
    the line that was being parsed (or None when unknown).
    """

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class EvaluationError(InvheatError):
    """A user-supplied function produced a non-finite value.

    Carries the location (quadrature node or grid point) that triggered it.
    """

    def __init__(self, message, where=None):
        self.where = where
        if where is not None:
            message = f"{message} at {where}"
        super().__init__(message)


class OutOfDomainError(InvheatError):
    """Evaluation requested outside the sampled range of a trajectory."""


class SingularMatrixError(InvheatError):
    """Zero (or below-threshold) pivot met during elimination."""

    def __init__(self, pivot_index, pivot_value=0.0):
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value
        super().__init__(
            f"matrix is singular to working precision: pivot {pivot_index} "
            f"has magnitude {abs(pivot_value):.3e}"
        )


class AssumptionViolationError(InvheatError):
    """Problem data fail the solvability assumptions.

    ``clauses`` lists the names of the failing clauses.
    """

    def __init__(self, message, clauses=()):
        self.clauses = tuple(clauses)
        super().__init__(message)


class DegenerateProblemError(InvheatError):
    """The identification denominator vanished: the data cannot determine
    the diffusivity (empty even spectrum, or it decayed below threshold)."""


class FlatGradientError(InvheatError):
    """The discrete boundary gradient u_1 - u_0 fell under the division
    guard, so the measured energy cannot identify the diffusivity here."""

    def __init__(self, level, iteration=None):
        self.level = level
        self.iteration = iteration
        at = f"time level {level}" + ("" if iteration is None else f", inner iteration {iteration}")
        super().__init__(f"flat boundary gradient at {at}")


class NonConvergenceError(InvheatError):
    """Fixed-point iteration exhausted its budget.

    ``history`` holds the residual per iteration for post-mortems.
    """

    def __init__(self, message, history=()):
        self.history = list(history)
        super().__init__(message)
