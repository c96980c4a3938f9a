"""Local solvers for nonconvex programs with difference-of-convex
quadratic constraints, plus the benchmark problems and CLI around them."""

from .dc_model import (ConvexQuadratic, ConvexSetOmega, DCPair, DCProgram,
                       SymMatrix, ValidationError, eval_quadratic,
                       grad_quadratic, shift_dc_pair, spectral_dc_split,
                       strong_convexity_param, validate_program)
from .inner_solver import (ConvexSubproblem, InnerSolution, InnerStatus,
                           LinMultipliers, inner_kkt_residual, phase1_point,
                           solve_subproblem)
from .jacobi import EigensolverError, eigh_symmetric
from .problems import (BilinearNmpcData, MpccData, SplitMix64,
                       build_bilinear_nmpc, build_mpcc, build_slow_dca_instance,
                       build_small_example, find_dc_feasible_point,
                       gen_random_mpcc, gen_random_ncvqcqp, mpcc_oracle)
from .scp_engine import (IterationRecord, SolveReport, SolveStatus,
                         SolverConfig, build_scp_subproblem, check_descent,
                         kkt_fixed_point_residual, project_onto_omega,
                         solve_dca, solve_rscp, solve_scp)

__version__ = "0.1.0"

__all__ = [
    "ConvexQuadratic", "ConvexSetOmega", "DCPair", "DCProgram", "SymMatrix",
    "ValidationError", "eval_quadratic", "grad_quadratic", "shift_dc_pair",
    "spectral_dc_split", "strong_convexity_param", "validate_program",
    "ConvexSubproblem", "InnerSolution", "InnerStatus", "LinMultipliers",
    "inner_kkt_residual", "phase1_point", "solve_subproblem",
    "EigensolverError", "eigh_symmetric",
    "BilinearNmpcData", "MpccData", "SplitMix64", "build_bilinear_nmpc",
    "build_mpcc", "build_slow_dca_instance", "build_small_example",
    "find_dc_feasible_point", "gen_random_mpcc", "gen_random_ncvqcqp",
    "mpcc_oracle",
    "IterationRecord", "SolveReport", "SolveStatus", "SolverConfig",
    "build_scp_subproblem", "check_descent", "kkt_fixed_point_residual",
    "project_onto_omega", "solve_dca", "solve_rscp", "solve_scp",
    "__version__",
]
