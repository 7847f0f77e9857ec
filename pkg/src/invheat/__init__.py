"""invheat: joint identification of a time-dependent diffusivity and the
temperature field in a 1-D heat equation from an integral energy
measurement, under nonlocal boundary conditions.

Two independent solvers are provided: a biorthonormal-series fixed-point
method and a Crank-Nicolson predictor-corrector finite-difference method,
plus an experiment harness that cross-checks them.
"""

from .analysis import (
    ConvergenceStudy,
    CrossValidation,
    ErrorTable,
    PerturbationResult,
    convergence_study,
    cross_validate,
    error_table,
    pde_residual,
    stability_experiment,
    write_csv,
)
from .basis import eigen_x, eigen_y, eigenvalue, mode_number, project
from .errors import (
    AssumptionViolationError,
    DegenerateProblemError,
    EvaluationError,
    ExpressionError,
    FlatGradientError,
    InvheatError,
    NonConvergenceError,
    OutOfDomainError,
    SingularMatrixError,
    UsageError,
)
from .expressions import Expression, parse_expression
from .fdm import (
    DiscreteSolution,
    FdmGrid,
    assemble_step,
    estimate_a,
    run_forward_fdm,
    run_inverse_fdm,
)
from .fields import CoefficientTrajectory, TemperatureField
from .numerics import (
    BorderedTridiagonalMatrix,
    QuadratureConfig,
    integrate,
    interpolate,
    solve_bordered,
)
from .problem import (
    AssumptionReport,
    ProblemData,
    ScalarField1D,
    SourceField,
    TimeSignal,
    load_problem,
    parse_problem,
    validate_assumptions,
)
from .spectral import (
    SpectralCoefficients,
    SpectralDiagnostics,
    StabilityBounds,
    apply_P,
    compute_coefficients,
    forward_solve,
    mode_trajectories,
    solve_inverse_spectral,
    stability_bounds,
)

__version__ = "0.1.0"
