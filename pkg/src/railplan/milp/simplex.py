"""Two-phase revised simplex for LPs with bounded variables.

Rows are brought to equality form with one slack each; phase 1 drives a
basis of signed artificials to zero, phase 2 optimizes the true objective.
Pricing is Dantzig (most violating reduced cost) and falls back to Bland's
rule after a run of non-improving pivots, which guarantees termination on
degenerate models.  The basis inverse is kept explicitly and refreshed
periodically.  Intended for the desk-scale models of this package; large
models are better served by the scipy-backed solver in scipy_backend.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from .model import (
    EQUAL,
    GREATER_EQUAL,
    INF,
    INFEASIBLE,
    LESS_EQUAL,
    MilpError,
    MipModel,
    OPTIMAL,
    SolveResult,
    SolveStats,
    UNBOUNDED,
)

DUAL_TOL = 1e-8
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
REFRESH_EVERY = 256
BLAND_AFTER = 400

NB_LOWER = 0
NB_UPPER = 1
NB_FREE = 2
BASIC = 3


class NumericalInstabilityError(MilpError):
    """Raised when the pivot limit is exhausted without convergence."""


@dataclass
class _Extended:
    """Equality-form data: structural columns then one slack per row."""

    matrix: sparse.csc_matrix
    lower: np.ndarray
    upper: np.ndarray
    n_structural: int


def _extend(model: MipModel, lower_override, upper_override) -> _Extended:
    n = model.n_variables
    m = model.n_rows
    A = model.matrix()
    slack = sparse.identity(m, format="csc")
    full = sparse.hstack([A.tocsc(), slack], format="csc") if m else sparse.csc_matrix((0, n))
    var_lower = model.lower_bounds() if lower_override is None else np.asarray(lower_override, float)
    var_upper = model.upper_bounds() if upper_override is None else np.asarray(upper_override, float)
    lower = np.concatenate([var_lower, np.zeros(m)])
    upper = np.concatenate([var_upper, np.zeros(m)])
    for i, sense in enumerate(model.senses()):
        if sense == LESS_EQUAL:
            lower[n + i], upper[n + i] = 0.0, INF
        elif sense == GREATER_EQUAL:
            lower[n + i], upper[n + i] = -INF, 0.0
        else:
            lower[n + i], upper[n + i] = 0.0, 0.0
    return _Extended(full, lower, upper, n)


class _Simplex:
    def __init__(self, model: MipModel, max_pivots: int, lower_override=None, upper_override=None):
        self.model = model
        self.max_pivots = max_pivots
        ext = _extend(model, lower_override, upper_override)
        self.A = ext.matrix
        self.lower = ext.lower
        self.upper = ext.upper
        self.n_struct = ext.n_structural
        self.m = model.n_rows
        self.n_ext = self.A.shape[1]
        self.b = model.rhs_vector()
        self.iterations = 0
        self._stall = 0
        self._bland = False
        self._last_obj = INF

        # nonbasic start: every column at its bound closest to zero
        self.status = np.full(self.n_ext, NB_LOWER, dtype=np.int8)
        self.x = np.zeros(self.n_ext)
        for j in range(self.n_ext):
            lo, hi = self.lower[j], self.upper[j]
            if lo == -INF and hi == INF:
                self.status[j] = NB_FREE
                self.x[j] = 0.0
            elif lo == -INF or (hi < INF and abs(hi) < abs(lo)):
                self.status[j] = NB_UPPER
                self.x[j] = hi
            else:
                self.status[j] = NB_LOWER
                self.x[j] = lo

        residual = self.b - self.A @ self.x
        self.art_sign = np.where(residual >= 0, 1.0, -1.0)
        self.basis = np.arange(self.n_ext, self.n_ext + self.m)
        self.art_active = np.ones(self.m, dtype=bool)
        self.x_basic = np.abs(residual)
        self.binv = np.diag(self.art_sign) if self.m else np.zeros((0, 0))
        self.cost = np.zeros(self.n_ext + self.m)

    # -- column access ------------------------------------------------------

    def column(self, j: int) -> np.ndarray:
        if j >= self.n_ext:  # artificial
            col = np.zeros(self.m)
            col[j - self.n_ext] = self.art_sign[j - self.n_ext]
            return col
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        col = np.zeros(self.m)
        col[self.A.indices[start:end]] = self.A.data[start:end]
        return col

    def ftran(self, j: int) -> np.ndarray:
        if j >= self.n_ext:
            return self.binv[:, j - self.n_ext] * self.art_sign[j - self.n_ext]
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        rows = self.A.indices[start:end]
        vals = self.A.data[start:end]
        if len(rows) == 0:
            return np.zeros(self.m)
        return self.binv[:, rows] @ vals

    def var_bounds(self, j: int):
        if j >= self.n_ext:
            i = j - self.n_ext
            return (0.0, INF) if self.art_active[i] else (0.0, 0.0)
        return self.lower[j], self.upper[j]

    # -- pricing ------------------------------------------------------------

    def reduced_costs(self) -> np.ndarray:
        c_basic = self.cost[self.basis]
        y = self.binv.T @ c_basic if self.m else np.zeros(0)
        d = self.cost[: self.n_ext] - (self.A.T @ y if self.m else 0.0)
        d_art = self.cost[self.n_ext :] - y * self.art_sign if self.m else np.zeros(0)
        return np.concatenate([d, d_art]), y

    def pick_entering(self, d: np.ndarray) -> Optional[int]:
        nonbasic = np.ones(self.n_ext + self.m, dtype=bool)
        nonbasic[self.basis] = False
        lo = np.concatenate([self.lower, np.zeros(self.m)])
        hi = np.concatenate([self.upper, np.where(self.art_active, INF, 0.0)])
        fixed = lo == hi
        status = np.concatenate([self.status, np.full(self.m, NB_LOWER, dtype=np.int8)])
        can_up = nonbasic & ~fixed & ((status == NB_LOWER) | (status == NB_FREE)) & (d < -DUAL_TOL)
        can_dn = nonbasic & ~fixed & ((status == NB_UPPER) | (status == NB_FREE)) & (d > DUAL_TOL)
        eligible = can_up | can_dn
        if not eligible.any():
            return None
        if self._bland:
            return int(np.nonzero(eligible)[0][0])
        scores = np.where(eligible, np.abs(d), 0.0)
        return int(np.argmax(scores))

    # -- pivoting -----------------------------------------------------------

    def refresh(self) -> None:
        if self.m == 0:
            return
        cols = []
        for j in self.basis:
            cols.append(self.column(j))
        B = np.column_stack(cols)
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalInstabilityError("basis became singular") from exc
        values = self.x.copy()
        nb_mask = np.ones(self.n_ext, dtype=bool)
        nb_mask[self.basis[self.basis < self.n_ext]] = False
        rhs = self.b - self.A @ (values * nb_mask)
        self.x_basic = self.binv @ rhs

    def pivot(self, entering: int, leaving_pos: int, w: np.ndarray, t: float, direction: float) -> None:
        self.x_basic = self.x_basic - direction * t * w
        leaving = self.basis[leaving_pos]
        lo_l, hi_l = self.var_bounds(leaving)
        hit_lower = direction * w[leaving_pos] > 0
        leave_value = lo_l if hit_lower else hi_l
        if leaving < self.n_ext:
            self.status[leaving] = NB_LOWER if hit_lower else NB_UPPER
            self.x[leaving] = leave_value
        else:
            self.art_active[leaving - self.n_ext] = False
        if entering < self.n_ext:
            enter_value = self.x[entering] + direction * t
            self.status[entering] = BASIC
        else:
            enter_value = direction * t
        self.basis[leaving_pos] = entering
        self.x_basic[leaving_pos] = enter_value
        pivot_row = self.binv[leaving_pos] / w[leaving_pos]
        w_rest = w.copy()
        w_rest[leaving_pos] = 0.0
        self.binv -= np.outer(w_rest, pivot_row)
        self.binv[leaving_pos] = pivot_row

    def run_phase(self, phase: int) -> str:
        while True:
            self.iterations += 1
            if self.iterations > self.max_pivots:
                raise NumericalInstabilityError(
                    f"pivot limit {self.max_pivots} exhausted in phase {phase}"
                )
            if self.iterations % REFRESH_EVERY == 0:
                self.refresh()
            d, _ = self.reduced_costs()
            entering = self.pick_entering(d)
            if entering is None:
                return OPTIMAL
            direction = 1.0 if d[entering] < 0 else -1.0
            w = self.ftran(entering)

            lo_e, hi_e = self.var_bounds(entering)
            flip_limit = hi_e - lo_e if (lo_e > -INF and hi_e < INF) else INF
            best_t = flip_limit
            leaving_pos = -1
            denom = direction * w
            for pos in range(self.m):
                dw = denom[pos]
                var = self.basis[pos]
                lo_b, hi_b = self.var_bounds(var)
                if dw > PIVOT_TOL:
                    if lo_b == -INF:
                        continue
                    t = (self.x_basic[pos] - lo_b) / dw
                elif dw < -PIVOT_TOL:
                    if hi_b == INF:
                        continue
                    t = (self.x_basic[pos] - hi_b) / dw
                else:
                    continue
                t = max(t, 0.0)
                if t < best_t - PIVOT_TOL or (
                    t < best_t + PIVOT_TOL
                    and leaving_pos >= 0
                    and (
                        abs(w[pos]) > abs(w[leaving_pos])
                        if not self._bland
                        else self.basis[pos] < self.basis[leaving_pos]
                    )
                ):
                    best_t = t
                    leaving_pos = pos

            if leaving_pos < 0:
                if flip_limit == INF:
                    return UNBOUNDED
                # bound flip: entering moves to its other bound, basis unchanged
                self.x_basic = self.x_basic - direction * flip_limit * w
                if entering < self.n_ext:
                    self.status[entering] = NB_UPPER if direction > 0 else NB_LOWER
                    self.x[entering] = hi_e if direction > 0 else lo_e
                self._note_progress()
                continue

            self.pivot(entering, leaving_pos, w, best_t, direction)
            self._note_progress()

    def _note_progress(self) -> None:
        obj = float(self.cost[self.basis] @ self.x_basic) + float(
            self.cost[: self.n_ext] @ (self.x * self._nonbasic_mask())
        )
        if obj < self._last_obj - 1e-12:
            self._stall = 0
            self._bland = False
        else:
            self._stall += 1
            if self._stall > BLAND_AFTER:
                self._bland = True
        self._last_obj = obj

    def _nonbasic_mask(self) -> np.ndarray:
        mask = np.ones(self.n_ext, dtype=bool)
        mask[self.basis[self.basis < self.n_ext]] = False
        return mask

    def full_values(self) -> np.ndarray:
        values = self.x * self._nonbasic_mask()
        structural_basis = self.basis < self.n_ext
        values[self.basis[structural_basis]] = self.x_basic[structural_basis]
        return values

    def solve(self) -> SolveResult:
        start = time.perf_counter()
        # phase 1: minimize total artificial value
        self.cost[:] = 0.0
        self.cost[self.n_ext :] = 1.0
        self._last_obj = INF
        self._stall = 0
        status = self.run_phase(1)
        art_total = float(
            self.x_basic[np.isin(self.basis, np.arange(self.n_ext, self.n_ext + self.m))].sum()
        )
        if status == UNBOUNDED or art_total > 1e-7 * max(1.0, float(np.abs(self.b).sum())):
            return SolveResult(
                status=INFEASIBLE,
                stats=SolveStats(iterations=self.iterations, total_time=time.perf_counter() - start),
            )
        self.art_active[:] = False  # artificials pinned to zero from here on

        # phase 2: true objective
        self.cost[:] = 0.0
        self.cost[: self.model.n_variables] = self.model.objective_vector()
        self._last_obj = INF
        self._stall = 0
        self._bland = False
        status = self.run_phase(2)
        elapsed = time.perf_counter() - start
        stats = SolveStats(iterations=self.iterations, total_time=elapsed)
        if status == UNBOUNDED:
            return SolveResult(status=UNBOUNDED, stats=stats)

        self.refresh()
        values = self.full_values()
        x = values[: self.model.n_variables]
        d, y = self.reduced_costs()
        objective = self.model.objective_value(x)
        dual_obj = float(y @ self.b) + self.model.objective_constant
        nonbasic = self._nonbasic_mask()
        for j in range(self.model.n_variables):
            if not nonbasic[j]:
                continue
            if self.status[j] == NB_LOWER:
                dual_obj += d[j] * self.lower[j]
            elif self.status[j] == NB_UPPER:
                dual_obj += d[j] * self.upper[j]
        return SolveResult(
            status=OPTIMAL,
            objective=objective,
            x=x,
            duals=y.copy() if self.m else np.zeros(0),
            reduced_costs=d[: self.model.n_variables].copy(),
            dual_objective=dual_obj,
            bound=objective,
            stats=stats,
        )


def solve_lp_simplex(
    model: MipModel,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    max_pivots: int = 200_000,
) -> SolveResult:
    """Solve the LP relaxation of ``model`` with the built-in simplex.

    Integrality flags are ignored; lower/upper override the model bounds.
    Raises NumericalInstabilityError when the pivot limit is exhausted.
    """
    if model.n_variables == 0:
        return SolveResult(status=OPTIMAL, objective=model.objective_constant, x=np.zeros(0),
                           duals=np.zeros(model.n_rows), reduced_costs=np.zeros(0),
                           dual_objective=model.objective_constant, bound=model.objective_constant)
    if lower is not None and upper is not None and np.any(np.asarray(lower) > np.asarray(upper)):
        return SolveResult(status=INFEASIBLE)
    return _Simplex(model, max_pivots, lower, upper).solve()
