"""Proximal iteratively reweighted l1 solver for lp-regularized problems.

The package solves min f(x) + lam * sum_i |x_i|^p with 0 < p < 1 for
smooth f by repeatedly soft-thresholding against reweighted l1 models of
the quasi-norm, and ships a diagnostics engine that measures the
algorithm's provable properties (descent, support stabilization,
gradient bounds, local rates) along actual solver traces.
"""

from .core import (
    BetaTooSmallError,
    CProvenance,
    DiagnosticsReport,
    LpProblem,
    RateClass,
    Schedule,
    SolverConfig,
    SolverResult,
    SolverStatus,
    TraceRecord,
)
from .diagnostics import (
    CConditionsCheck,
    CEstimate,
    DeltaTrace,
    DescentCheck,
    GradientBoundCheck,
    NonGeometricScheduleError,
    NotStabilizedError,
    RateEstimate,
    Stabilization,
    check_c_conditions,
    check_descent,
    check_gradient_bound,
    check_magnitude_bound,
    check_zero_absorption,
    constant_C,
    estimate_rate,
    estimate_rate_from_errors,
    grad_F_xdelta,
    run_diagnostics,
    support_sign_stabilization,
)
from .estimator import LpRegressor
from .losses import (
    LeastSquares,
    Logistic,
    PowerIterationError,
    Quadratic,
    SmoothLoss,
    fd_grad_check,
)
from .prox import (
    prox_1d_brute_force,
    subproblem_optimality_residual,
    subproblem_solve,
    weighted_soft_threshold,
)
from .solver import (
    compute_weights,
    default_config,
    run,
    smoothed_objective,
    stationarity_residual,
    update_epsilon,
)

__version__ = "0.1.0"

__all__ = [
    "BetaTooSmallError",
    "CConditionsCheck",
    "CEstimate",
    "CProvenance",
    "DeltaTrace",
    "DescentCheck",
    "DiagnosticsReport",
    "GradientBoundCheck",
    "LeastSquares",
    "Logistic",
    "LpProblem",
    "LpRegressor",
    "NonGeometricScheduleError",
    "NotStabilizedError",
    "PowerIterationError",
    "Quadratic",
    "RateClass",
    "RateEstimate",
    "Schedule",
    "SmoothLoss",
    "SolverConfig",
    "SolverResult",
    "SolverStatus",
    "Stabilization",
    "TraceRecord",
    "check_c_conditions",
    "check_descent",
    "check_gradient_bound",
    "check_magnitude_bound",
    "check_zero_absorption",
    "compute_weights",
    "constant_C",
    "default_config",
    "estimate_rate",
    "estimate_rate_from_errors",
    "fd_grad_check",
    "grad_F_xdelta",
    "prox_1d_brute_force",
    "run",
    "run_diagnostics",
    "smoothed_objective",
    "stationarity_residual",
    "subproblem_optimality_residual",
    "subproblem_solve",
    "support_sign_stabilization",
    "update_epsilon",
    "weighted_soft_threshold",
]
