"""Scale-shape dual solver for entropy-regularized nonnegative least squares.

The library solves min_x (1/(2*lam)) ||A x - b||^2 + <c, x> + sum_j x_j log(x_j / q_j)
over the nonnegative orthant through a dual system in the pair (y, tau), where
tau is the total mass of x and the shape x / tau lives on the simplex.  All
exponentials are evaluated in the log domain, so the iteration survives
problem scalings that overflow the classical dual formulation.
"""

from .kernels import (
    EPS,
    EXP_OVERFLOW,
    ExponentLedger,
    KernelDomainError,
    global_max_exponent,
    lambert_w,
    lambert_w_exp_arg,
    logsumexp_w,
    reset_global_max_exponent,
    softmax_w,
)
from .problem import (
    DataConstants,
    ProblemData,
    ScaleShape,
    ValidationError,
    clip_prior,
    compose,
    data_constants,
    decompose,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
    validate,
)
from .dual import (
    DualPoint,
    JacobianEval,
    SystemEval,
    classical_dual_gradient,
    classical_dual_hessian,
    classical_dual_objective,
    dual_objective,
    eval_DF,
    eval_F,
    primal_from_dual,
)
from .certificates import (
    LevelSetBounds,
    RateCertificate,
    direction_bound,
    jacobian_strip_bounds,
    level_bounds,
    lipschitz_DF_bound,
    rate_certificate,
    residual_ceiling,
)
from .solver import (
    IterationRecord,
    SolveReport,
    SolverConfig,
    solve,
    solve_classical,
    solve_fixed_scale,
)
from .sensitivity import (
    PathRecord,
    SolutionJacobians,
    joint_lipschitz_bound,
    path_monotonicity,
    regularization_path,
    solution_jacobians,
)
from .ueg import (
    UegSpec,
    emit_plots,
    gen_ueg,
    numerical_rank,
    run_overflow_experiment,
    run_path_experiment,
    run_scale_experiment,
    unexpected_failures,
)

__all__ = [
    "EPS",
    "EXP_OVERFLOW",
    "ExponentLedger",
    "KernelDomainError",
    "global_max_exponent",
    "lambert_w",
    "lambert_w_exp_arg",
    "logsumexp_w",
    "reset_global_max_exponent",
    "softmax_w",
    "DataConstants",
    "ProblemData",
    "ScaleShape",
    "ValidationError",
    "clip_prior",
    "compose",
    "data_constants",
    "decompose",
    "load_problem",
    "problem_from_dict",
    "problem_to_dict",
    "save_problem",
    "validate",
    "DualPoint",
    "JacobianEval",
    "SystemEval",
    "classical_dual_gradient",
    "classical_dual_hessian",
    "classical_dual_objective",
    "dual_objective",
    "eval_DF",
    "eval_F",
    "primal_from_dual",
    "LevelSetBounds",
    "RateCertificate",
    "direction_bound",
    "jacobian_strip_bounds",
    "level_bounds",
    "lipschitz_DF_bound",
    "rate_certificate",
    "residual_ceiling",
    "IterationRecord",
    "SolveReport",
    "SolverConfig",
    "solve",
    "solve_classical",
    "solve_fixed_scale",
    "PathRecord",
    "SolutionJacobians",
    "joint_lipschitz_bound",
    "path_monotonicity",
    "regularization_path",
    "solution_jacobians",
    "UegSpec",
    "emit_plots",
    "gen_ueg",
    "numerical_rank",
    "run_overflow_experiment",
    "run_path_experiment",
    "run_scale_experiment",
    "unexpected_failures",
]

__version__ = "0.1.0"
