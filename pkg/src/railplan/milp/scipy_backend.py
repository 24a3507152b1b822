"""LP/MIP backends delegating to scipy.optimize (HiGHS).

Used as the fast alternative to the built-in simplex for larger models;
row duals coming back from HiGHS are mapped onto this package's sign
conventions (equality-form multipliers, <= rows nonpositive).
"""

from __future__ import annotations

import math
import time
from typing import Optional

import numpy as np
from scipy import optimize, sparse

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


def _constraint_ranges(model: MipModel):
    rhs = model.rhs_vector()
    lo = np.full(model.n_rows, -INF)
    hi = np.full(model.n_rows, INF)
    for i, sense in enumerate(model.senses()):
        if sense == LESS_EQUAL:
            hi[i] = rhs[i]
        elif sense == GREATER_EQUAL:
            lo[i] = rhs[i]
        else:
            lo[i] = hi[i] = rhs[i]
    return lo, hi


def solve_lp_highs(
    model: MipModel,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
) -> SolveResult:
    """LP relaxation via scipy.optimize.linprog (HiGHS), with duals.

    lower/upper override the model bounds (used by branch and bound nodes).
    """
    start = time.perf_counter()
    lo = model.lower_bounds() if lower is None else lower
    hi = model.upper_bounds() if upper is None else upper
    if np.any(lo > hi):
        return SolveResult(status=INFEASIBLE, stats=SolveStats(total_time=time.perf_counter() - start))
    A = model.matrix()
    senses = model.senses()
    rhs = model.rhs_vector()
    ub_rows = [i for i, s in enumerate(senses) if s != EQUAL]
    eq_rows = [i for i, s in enumerate(senses) if s == EQUAL]
    sign = np.array([1.0 if senses[i] == LESS_EQUAL else -1.0 for i in ub_rows])
    A_ub = (sparse.diags(sign) @ A[ub_rows]) if ub_rows else None
    b_ub = sign * rhs[ub_rows] if ub_rows else None
    A_eq = A[eq_rows] if eq_rows else None
    b_eq = rhs[eq_rows] if eq_rows else None
    res = optimize.linprog(
        model.objective_vector(),
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lo, hi]),
        method="highs",
    )
    elapsed = time.perf_counter() - start
    stats = SolveStats(iterations=int(getattr(res, "nit", 0) or 0), total_time=elapsed)
    if res.status == 2:
        return SolveResult(status=INFEASIBLE, stats=stats)
    if res.status == 3:
        return SolveResult(status=UNBOUNDED, stats=stats)
    if res.status != 0:
        raise MilpError(f"linprog failed: {res.message}")

    duals = np.zeros(model.n_rows)
    if ub_rows:
        duals[ub_rows] = sign * res.ineqlin.marginals
    if eq_rows:
        duals[eq_rows] = res.eqlin.marginals
    reduced = model.objective_vector() - A.T @ duals
    dual_obj = float(duals @ rhs) + model.objective_constant
    lo_safe = np.where(np.isfinite(lo), lo, 0.0)
    hi_safe = np.where(np.isfinite(hi), hi, 0.0)
    dual_obj += float(np.sum(np.maximum(reduced, 0.0) * lo_safe * np.isfinite(lo)))
    dual_obj += float(np.sum(np.minimum(reduced, 0.0) * hi_safe * np.isfinite(hi)))
    objective = model.objective_value(res.x)
    return SolveResult(
        status=OPTIMAL,
        objective=objective,
        x=np.asarray(res.x, dtype=float),
        duals=duals,
        reduced_costs=reduced,
        dual_objective=dual_obj,
        bound=objective,
        stats=stats,
    )


def solve_mip_highs(
    model: MipModel,
    time_limit: Optional[float] = None,
    gap_tolerance: float = 0.0,
    node_limit: Optional[int] = None,
) -> SolveResult:
    """Whole-model MIP solve via scipy.optimize.milp (HiGHS branch and cut)."""
    start = time.perf_counter()
    integrality = np.zeros(model.n_variables)
    integrality[model.integer_indices()] = 1
    lo, hi = _constraint_ranges(model)
    constraints = (
        optimize.LinearConstraint(model.matrix(), lo, hi) if model.n_rows else ()
    )
    options = {"mip_rel_gap": gap_tolerance}
    if time_limit is not None:
        options["time_limit"] = time_limit
    if node_limit is not None:
        options["node_limit"] = node_limit
    res = optimize.milp(
        c=model.objective_vector(),
        constraints=constraints,
        integrality=integrality,
        bounds=optimize.Bounds(model.lower_bounds(), model.upper_bounds()),
        options=options,
    )
    elapsed = time.perf_counter() - start
    stats = SolveStats(total_time=elapsed)
    if res.status == 2:
        return SolveResult(status=INFEASIBLE, stats=stats)
    if res.status == 3:
        return SolveResult(status=UNBOUNDED, stats=stats)
    if res.x is None:
        return SolveResult(status=LIMIT, bound=-INF, stats=stats)
    x = np.asarray(res.x, dtype=float)
    objective = model.objective_value(x)
    bound = res.mip_dual_bound + model.objective_constant if res.mip_dual_bound is not None else objective
    status = OPTIMAL if res.status == 0 else LIMIT
    return SolveResult(status=status, objective=objective, x=x, bound=bound, stats=stats)
