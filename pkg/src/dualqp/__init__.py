"""Dense convex QP solver working through the dual.

The pipeline: transform a strictly convex primal QP into its dual bound-
constrained QP (build_dual), run the dual active-set method with masked
Cholesky updates and proximal-point refinement (solve_dual), and map the
multipliers back to the primal point (recover_primal).  solve() chains
the three.
"""

from .kernel import (CholeskyDowndateError, MaskedFactor, WorkingSet,
                     add_index, build_masked, factorize,
                     lambda_from_direction, mask_vector, remove_index,
                     solve_with_factor)
from .refine import (OutcomeKind, RefineConfig, RefineOutcome,
                     RefinementError, contraction_rate, project_null,
                     refine_solve)
from .active_set import (DualQP, IterateState, SolveReport, SolveStatus,
                         SolverConfig, UnboundedDualError, smartstart,
                         solve_dual, step_length, subproblem_direction)
from .transform import (InvalidProblemError, PFactor, PrimalQP,
                        PrimalSolution, build_dual, recover_primal)
from .oracle import (InfeasibleProblemError, OracleResult, enumerate_solve,
                     random_qp)
from .generators import (MpcSpec, PolytopeSpec, afti16_spec, build_mpc,
                         build_polytope)
from .cli import ProblemFormatError, load_problem, save_problem

__version__ = "0.1.0"


def solve(primal, cfg=None, w0=None):
    """Solve a PrimalQP end to end.

    Returns (PrimalSolution, SolveReport).  Raises UnboundedDualError
    when the primal is infeasible.
    """
    dual, pf = build_dual(primal)
    report = solve_dual(dual, W0=w0, cfg=cfg)
    solution = recover_primal(primal, pf, report.mu_star)
    return solution, report


__all__ = [
    "CholeskyDowndateError", "MaskedFactor", "WorkingSet", "add_index",
    "build_masked", "factorize", "lambda_from_direction", "mask_vector",
    "remove_index", "solve_with_factor",
    "OutcomeKind", "RefineConfig", "RefineOutcome", "RefinementError",
    "contraction_rate", "project_null", "refine_solve",
    "DualQP", "IterateState", "SolveReport", "SolveStatus", "SolverConfig",
    "UnboundedDualError", "smartstart", "solve_dual", "step_length",
    "subproblem_direction",
    "InvalidProblemError", "PFactor", "PrimalQP", "PrimalSolution",
    "build_dual", "recover_primal",
    "InfeasibleProblemError", "OracleResult", "enumerate_solve", "random_qp",
    "MpcSpec", "PolytopeSpec", "afti16_spec", "build_mpc", "build_polytope",
    "ProblemFormatError", "load_problem", "save_problem",
    "solve",
]
