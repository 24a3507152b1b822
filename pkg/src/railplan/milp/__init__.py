"""Solver-agnostic optimization backend.

Sparse model container, exact LP solving (built-in bounded-variable simplex
or scipy/HiGHS), branch and bound for mixed-binary models, LP-format file
export/import, and a subprocess adapter for external solvers.
"""

from .bb import MipOptions, solve_mip
from .external import (
    ExternalSolverError,
    SolutionFileError,
    SolutionInfeasibleError,
    bundled_worker_command,
    parse_solution_file,
    solve_external,
)
from .lpfile import export_lp_format, parse_lp_format
from .model import (
    EQUAL,
    GREATER_EQUAL,
    INF,
    INFEASIBLE,
    LESS_EQUAL,
    LIMIT,
    MilpError,
    MipModel,
    OPTIMAL,
    SolveResult,
    SolveStats,
    UNBOUNDED,
)
from .scipy_backend import solve_lp_highs, solve_mip_highs
from .simplex import NumericalInstabilityError, solve_lp_simplex


def solve_lp(model: MipModel, backend: str = "simplex", **kwargs) -> SolveResult:
    """Solve the LP relaxation with the chosen backend."""
    if backend == "simplex":
        return solve_lp_simplex(model, **kwargs)
    if backend == "highs":
        return solve_lp_highs(model, **kwargs)
    raise MilpError(f"unknown LP backend {backend!r}")


__all__ = [
    "EQUAL",
    "GREATER_EQUAL",
    "INF",
    "INFEASIBLE",
    "LESS_EQUAL",
    "LIMIT",
    "ExternalSolverError",
    "MilpError",
    "MipModel",
    "MipOptions",
    "NumericalInstabilityError",
    "OPTIMAL",
    "SolutionFileError",
    "SolutionInfeasibleError",
    "SolveResult",
    "SolveStats",
    "UNBOUNDED",
    "bundled_worker_command",
    "export_lp_format",
    "parse_lp_format",
    "parse_solution_file",
    "solve_external",
    "solve_lp",
    "solve_lp_highs",
    "solve_lp_simplex",
    "solve_mip",
    "solve_mip_highs",
]
