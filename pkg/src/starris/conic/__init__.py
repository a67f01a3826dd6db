from .backend import SolveSettings, solve
from .program import ConicProgram, ConicSolution, Constraint, LinearExpr
from .recovery import (RandomizationResult, complex_gaussian_sample, extract_rank_one,
                       gaussian_randomization)
from .subproblems import (BsSubproblemData, RisSubproblemData, bs_subproblem_data,
                          build_bs_subproblem, build_ris_subproblem, ris_subproblem_data)

__all__ = [
    "BsSubproblemData", "ConicProgram", "ConicSolution", "Constraint", "LinearExpr",
    "RandomizationResult", "RisSubproblemData", "SolveSettings", "bs_subproblem_data",
    "build_bs_subproblem", "build_ris_subproblem", "complex_gaussian_sample",
    "extract_rank_one", "gaussian_randomization", "ris_subproblem_data", "solve",
]
