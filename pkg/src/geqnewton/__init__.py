"""Josephy-Newton solver for box-constrained generalized equations.

Solves ``0 in f(x) + N_B(x)`` and certifies the iterates with scalar
majorant functions (Kantorovich and Smale presets).
"""
from geqnewton.avi import AviSolution, AviStatus, lcp_enumerate, lemke, lu_solve, solve_affine_ge
from geqnewton.driver import (
    Certificate,
    IterationHistory,
    Outcome,
    SolverOptions,
    certify,
    estimate_order,
    josephy_newton,
)
from geqnewton.errors import (
    DomainError,
    GeqnError,
    InsufficientDataError,
    NoCertificateError,
    ParameterError,
    ProblemParseError,
    RegularityError,
    SingularMatrixError,
    SubproblemError,
)
from geqnewton.geqn import (
    Box,
    GEProblem,
    SmoothMap,
    linearization_error,
    make_problem,
    natural_residual,
    project_box,
    regularity_modulus_smooth,
    verify_majorant_condition,
)
from geqnewton.kernels import BACKEND
from geqnewton.majorant import (
    MajorantFunction,
    check_conditions,
    make_custom,
    make_lipschitz,
    make_smale,
    newton_map,
    rate_constants,
    scalar_sequence,
    smallest_root,
)

__version__ = "0.1.0"
