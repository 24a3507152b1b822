"""Branch and bound over LP relaxations for mixed-binary models.

Node selection is best-bound with depth-first plunging (after branching,
the dive continues into the child on the rounded side until the subtree
dies, then the globally best node is picked up).  Branching chooses the
integer variable whose fractional part is closest to one half, ties broken
by lowest variable index.  Nodes run a feasibility-based bound-tightening
pass (plain interval propagation over the rows, plus the objective cutoff)
before their LP relaxation is solved.

The LP relaxations go through the built-in simplex by default; the
scipy/HiGHS backend can be selected for larger models, and the whole solve
can be delegated to HiGHS branch-and-cut with ``method="highs"``.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import sparse

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
from .simplex import solve_lp_simplex

INT_TOL = 1e-6
BOUND_EPS = 1e-9


@dataclass
class MipOptions:
    """Knobs for solve_mip; defaults give an exact, deterministic solve."""

    time_limit: Optional[float] = None
    gap_tolerance: float = 0.0
    node_limit: Optional[int] = None
    method: str = "bb"  # "bb" = built-in branch and bound, "highs" = delegate
    lp_backend: str = "simplex"  # "simplex" or "highs"
    propagate: bool = True
    objective_granularity: float = 0.0  # known spacing of attainable objectives
    log: Optional[Callable[[str], None]] = None


class _Propagator:
    """Vectorized interval propagation over the rows plus an objective cutoff.

    Row 0 of the augmented matrix is the objective; its upper bound is set to
    the incumbent cutoff before each run.  Only variable bounds are tightened
    (never rows), so every feasible point of the node survives.
    """

    def __init__(self, model: MipModel):
        obj = sparse.csr_matrix(model.objective_vector())
        self.A = sparse.vstack([obj, model.matrix()], format="csr")
        self.A.sort_indices()
        rhs = model.rhs_vector()
        senses = model.senses()
        self.row_lo = np.full(model.n_rows + 1, -INF)
        self.row_hi = np.full(model.n_rows + 1, INF)
        for i, sense in enumerate(senses):
            if sense == LESS_EQUAL:
                self.row_hi[i + 1] = rhs[i]
            elif sense == GREATER_EQUAL:
                self.row_lo[i + 1] = rhs[i]
            else:
                self.row_lo[i + 1] = rhs[i]
                self.row_hi[i + 1] = rhs[i]
        self.is_int = np.zeros(model.n_variables, dtype=bool)
        self.is_int[model.integer_indices()] = True
        self.cols = self.A.indices
        self.vals = self.A.data
        self.indptr = self.A.indptr
        self.rows_of_nnz = np.repeat(
            np.arange(self.A.shape[0]), np.diff(self.indptr)
        )
        self.constant = model.objective_constant

    def run(
        self,
        lo: np.ndarray,
        hi: np.ndarray,
        cutoff: float = INF,
        max_rounds: int = 8,
    ) -> bool:
        """Tighten lo/hi in place; returns False when infeasibility is proven."""
        self.row_hi[0] = cutoff - self.constant if cutoff < INF else INF
        pos = self.vals > 0
        for _ in range(max_rounds):
            cmin = np.where(pos, self.vals * lo[self.cols], self.vals * hi[self.cols])
            cmax = np.where(pos, self.vals * hi[self.cols], self.vals * lo[self.cols])
            fin_min = np.isfinite(cmin)
            fin_max = np.isfinite(cmax)
            min_fin = np.zeros(self.A.shape[0])
            max_fin = np.zeros(self.A.shape[0])
            np.add.at(min_fin, self.rows_of_nnz, np.where(fin_min, cmin, 0.0))
            np.add.at(max_fin, self.rows_of_nnz, np.where(fin_max, cmax, 0.0))
            ninf_min = np.zeros(self.A.shape[0], dtype=np.int64)
            ninf_max = np.zeros(self.A.shape[0], dtype=np.int64)
            np.add.at(ninf_min, self.rows_of_nnz, (~fin_min).astype(np.int64))
            np.add.at(ninf_max, self.rows_of_nnz, (~fin_max).astype(np.int64))

            # row infeasibility: tightest possible activity misses the row range
            bad = (ninf_min == 0) & (min_fin > self.row_hi + 1e-7 + 1e-7 * np.abs(self.row_hi))
            bad |= (ninf_max == 0) & (max_fin < self.row_lo - 1e-7 - 1e-7 * np.abs(self.row_lo))
            if bad.any():
                return False

            # residual row activity with one term removed
            rmin = np.where(
                ninf_min[self.rows_of_nnz] == 0,
                min_fin[self.rows_of_nnz] - np.where(fin_min, cmin, 0.0),
                np.where(
                    (ninf_min[self.rows_of_nnz] == 1) & ~fin_min,
                    min_fin[self.rows_of_nnz],
                    -INF,
                ),
            )
            rmax = np.where(
                ninf_max[self.rows_of_nnz] == 0,
                max_fin[self.rows_of_nnz] - np.where(fin_max, cmax, 0.0),
                np.where(
                    (ninf_max[self.rows_of_nnz] == 1) & ~fin_max,
                    max_fin[self.rows_of_nnz],
                    INF,
                ),
            )
            room_up = self.row_hi[self.rows_of_nnz] - rmin  # budget for a_j * x_j upward
            room_dn = self.row_lo[self.rows_of_nnz] - rmax  # requirement downward
            with np.errstate(invalid="ignore"):
                cand_hi_pos = np.where(
                    pos & np.isfinite(room_up), room_up / self.vals, INF
                )
                cand_lo_pos = np.where(
                    pos & np.isfinite(room_dn), room_dn / self.vals, -INF
                )
                cand_lo_neg = np.where(
                    ~pos & np.isfinite(room_up), room_up / self.vals, -INF
                )
                cand_hi_neg = np.where(
                    ~pos & np.isfinite(room_dn), room_dn / self.vals, INF
                )
            new_hi = hi.copy()
            new_lo = lo.copy()
            np.minimum.at(new_hi, self.cols, np.minimum(cand_hi_pos, cand_hi_neg))
            np.maximum.at(new_lo, self.cols, np.maximum(cand_lo_pos, cand_lo_neg))

            slack = 1e-9 + 1e-9 * np.maximum(np.minimum(np.abs(new_hi), 1e12), 1.0)
            tighten_hi = new_hi < hi - slack
            tighten_lo = new_lo > lo + slack
            new_hi = np.where(tighten_hi, new_hi, hi)
            new_lo = np.where(tighten_lo, new_lo, lo)
            new_hi[self.is_int] = np.floor(new_hi[self.is_int] + 1e-7)
            new_lo[self.is_int] = np.ceil(new_lo[self.is_int] - 1e-7)
            new_hi = np.minimum(new_hi, hi)
            new_lo = np.maximum(new_lo, lo)
            if np.any(new_lo > new_hi + 1e-9):
                return False
            changed = np.any(new_hi < hi - 1e-12) or np.any(new_lo > lo + 1e-12)
            hi[:] = new_hi
            lo[:] = new_lo
            if not changed:
                break
        return True


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    depth: int = field(compare=False)
    decisions: Tuple[Tuple[int, int, float], ...] = field(compare=False)  # (var, 0=hi/1=lo, value)


def _materialize(
    root_lo: np.ndarray, root_hi: np.ndarray, node: _Node
) -> Tuple[np.ndarray, np.ndarray]:
    lo = root_lo.copy()
    hi = root_hi.copy()
    for var, side, value in node.decisions:
        if side == 0:
            hi[var] = min(hi[var], value)
        else:
            lo[var] = max(lo[var], value)
    return lo, hi


def solve_mip(model: MipModel, options: Optional[MipOptions] = None) -> SolveResult:
    """Minimize a mixed-binary model to proven optimality.

    With default options the search runs until the best-bound/incumbent gap
    closes to gap_tolerance (zero = exact); hitting a time or node limit
    returns the best incumbent with status "limit" and the proven bound.
    """
    options = options or MipOptions()
    if options.method == "highs":
        return solve_mip_highs(
            model,
            time_limit=options.time_limit,
            gap_tolerance=options.gap_tolerance,
            node_limit=options.node_limit,
        )
    if options.method != "bb":
        raise MilpError(f"unknown solve method {options.method!r}")

    start = time.perf_counter()
    int_idx = model.integer_indices()
    if options.lp_backend == "highs":
        lp_solve = lambda lo, hi: solve_lp_highs(model, lo, hi)  # noqa: E731
    elif options.lp_backend == "simplex":
        lp_solve = lambda lo, hi: solve_lp_simplex(model, lo, hi)  # noqa: E731
    else:
        raise MilpError(f"unknown lp backend {options.lp_backend!r}")

    root_lo = model.lower_bounds().copy()
    root_hi = model.upper_bounds().copy()
    propagator = _Propagator(model) if options.propagate else None
    if propagator is not None and not propagator.run(root_lo, root_hi):
        return SolveResult(status=INFEASIBLE, stats=SolveStats(total_time=time.perf_counter() - start))

    granularity = max(options.objective_granularity, 0.0)
    incumbent_x: Optional[np.ndarray] = None
    incumbent_obj = INF
    ip_time = 0.0
    nodes_done = 0
    lp_iters = 0
    seq = 0
    heap: List[_Node] = []
    current: Optional[_Node] = _Node(bound=-INF, seq=seq, depth=0, decisions=())
    status = OPTIMAL

    def cutoff() -> float:
        if incumbent_obj == INF:
            return INF
        return incumbent_obj - max(granularity, options.gap_tolerance) + BOUND_EPS

    def out_of_budget() -> bool:
        if options.time_limit is not None and time.perf_counter() - start > options.time_limit:
            return True
        if options.node_limit is not None and nodes_done >= options.node_limit:
            return True
        return False

    while True:
        if current is None:
            if not heap:
                break
            current = heapq.heappop(heap)
            if current.bound >= cutoff():
                current = None
                continue
        if out_of_budget():
            status = LIMIT
            break
        node = current
        current = None
        nodes_done += 1

        lo, hi = _materialize(root_lo, root_hi, node)
        if propagator is not None and node.decisions:
            if not propagator.run(lo, hi, cutoff=cutoff()):
                continue
        result = lp_solve(lo, hi)
        lp_iters += result.stats.iterations
        if result.status == INFEASIBLE:
            continue
        if result.status == UNBOUNDED:
            return SolveResult(
                status=UNBOUNDED,
                stats=SolveStats(
                    nodes=nodes_done, iterations=lp_iters, total_time=time.perf_counter() - start
                ),
            )
        bound = result.objective
        if bound >= cutoff():
            continue
        x = result.x
        fractional = [
            int(j) for j in int_idx if abs(x[j] - round(x[j])) > INT_TOL
        ]
        if not fractional:
            snapped = x.copy()
            snapped[int_idx] = np.round(snapped[int_idx])
            obj = model.objective_value(snapped)
            if obj < incumbent_obj - 1e-12:
                incumbent_obj = obj
                incumbent_x = snapped
                ip_time = time.perf_counter() - start
                if options.log:
                    options.log(
                        f"incumbent {incumbent_obj:.6f} at node {nodes_done}"
                        f" ({ip_time:.1f}s)"
                    )
            continue

        frac_parts = np.array([abs(x[j] - math.floor(x[j]) - 0.5) for j in fractional])
        pick = fractional[int(np.argmin(frac_parts))]  # argmin takes lowest index on ties
        value = x[pick]
        down = _Node(
            bound=bound,
            seq=(seq := seq + 1),
            depth=node.depth + 1,
            decisions=node.decisions + ((pick, 0, math.floor(value)),),
        )
        up = _Node(
            bound=bound,
            seq=(seq := seq + 1),
            depth=node.depth + 1,
            decisions=node.decisions + ((pick, 1, math.ceil(value)),),
        )
        # plunge into the child on the rounded side, queue the other
        if value - math.floor(value) <= 0.5:
            current, queued = down, up
        else:
            current, queued = up, down
        heapq.heappush(heap, queued)

    total = time.perf_counter() - start
    best_bound = incumbent_obj
    alive = [n.bound for n in heap if n.bound < cutoff()]
    if current is not None:
        alive.append(current.bound)
    if status == LIMIT and alive:
        best_bound = min(min(alive), incumbent_obj)
    stats = SolveStats(iterations=lp_iters, nodes=nodes_done, ip_time=ip_time, total_time=total)
    if incumbent_x is None:
        if status == LIMIT:
            return SolveResult(status=LIMIT, bound=best_bound, stats=stats)
        return SolveResult(status=INFEASIBLE, stats=stats)
    return SolveResult(
        status=status,
        objective=incumbent_obj,
        x=incumbent_x,
        bound=best_bound,
        stats=stats,
    )
