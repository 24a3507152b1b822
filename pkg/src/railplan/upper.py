"""Scheduling MIP for renewal projects.

Translates an instance into a mixed-binary model over task-start variables
(binary) and task-running variables (continuous in [0,1]; the start/run
linking rows force their integrality), with per-project cancellation,
resource peaks, per-period blocking maxima and the coordination-weighted
traffic-impact proxy.  A decoder turns a variable assignment back into a
structured schedule, recomputing all derived quantities in exact rational
arithmetic and cross-checking them against the solver values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .milp import EQUAL, GREATER_EQUAL, INF, LESS_EQUAL, MipModel, SolveResult
from .model import CostConfig, Instance, Link, Project

Rational = Fraction


class UpperBuildError(ValueError):
    """Raised when a configuration cannot yield a feasible model."""


class UpperDecodeError(ValueError):
    """Raised when an assignment violates the model or its invariants."""


def _snap(value: float, tol: float = 1e-6) -> Fraction:
    """Exact rational from a solver float, snapping near-integers."""
    nearest = round(value)
    if abs(value - nearest) <= tol:
        return Fraction(nearest)
    return Fraction(repr(value))


@dataclass(frozen=True)
class UpperModelConfig:
    """Constraint-group and objective switches for the scheduling MIP.

    The default mirrors the reference experiments: event-time variables and
    their spacing rows are on, the cumulative rest rows are off.  Injected
    bounds are valid lower bounds supplied as variable bounds; they may
    change solve effort but never the optimum.
    """

    force_schedule_all: bool = False
    include_rest_constraints: bool = False
    include_event_time: bool = True
    include_disturbed_period_vars: bool = False
    order_pairs_only: bool = False
    tighten_start_windows: bool = True
    disruption_mode: str = "proxy"  # "proxy" or "external"
    external_period_costs: Optional[Dict[int, Fraction]] = None
    blocking_lower_bound: Optional[Fraction] = None
    resource_floors: Dict[str, Fraction] = field(default_factory=dict)
    utilization: Dict[Tuple[Link, int], Fraction] = field(default_factory=dict)

    def check(self, allow_cancel: bool) -> None:
        if not (self.include_rest_constraints or self.include_event_time):
            raise UpperBuildError(
                "at least one of the rest-constraint or event-time families must be on"
            )
        if self.include_rest_constraints and allow_cancel:
            raise UpperBuildError(
                "cumulative rest rows require force_schedule_all; with cancellation "
                "allowed they disagree with the event-time spacing"
            )
        if self.disruption_mode not in ("proxy", "external"):
            raise UpperBuildError(f"unknown disruption mode {self.disruption_mode!r}")
        if self.disruption_mode == "external" and not self.include_disturbed_period_vars:
            raise UpperBuildError(
                "external disruption costs attach to the disturbed-period variables"
            )


@dataclass
class UpperModel:
    """Built model plus the index maps needed to read a solution back."""

    model: MipModel
    instance: Instance
    config: UpperModelConfig
    z_index: Dict[Tuple[str, int, int], int]
    y_index: Dict[Tuple[str, int, int], int]
    s_index: Dict[str, int]
    q_index: Dict[str, int]
    e_index: Dict[Tuple[str, int], int]
    xbm_index: Dict[int, int]
    xd_index: Dict[int, int]
    blb_index: int
    bub_index: int
    start_ranges: Dict[Tuple[str, int], range]

    @property
    def size(self) -> Tuple[int, int]:
        return (self.model.n_variables, self.model.n_rows)


@dataclass
class UpperSolution:
    """Decoded schedule with exact derived quantities.

    starts maps (project, task index starting at 1) to the start period of
    scheduled tasks; blocking bounds and objective parts are recomputed from
    the schedule itself.
    """

    starts: Dict[Tuple[str, int], int]
    canceled: Dict[str, bool]
    resource_peaks: Dict[str, Fraction]
    q_values: Dict[str, Fraction]
    blocking_lb: Fraction
    blocking_ub: Fraction
    objective_parts: Tuple[Fraction, Fraction, Fraction, Fraction]
    objective: Fraction
    event_times: Dict[Tuple[str, int], Fraction] = field(default_factory=dict)
    disturbed_periods: Tuple[int, ...] = ()
    x: Optional[np.ndarray] = None

    def task_periods(self, instance: Instance) -> Dict[Tuple[str, int], range]:
        spans = {}
        for proj in instance.projects:
            for w in range(1, proj.task_count + 1):
                start = self.starts.get((proj.id, w))
                if start is not None:
                    spans[(proj.id, w)] = range(start, start + proj.tasks[w - 1].duration)
        return spans

    def active_tasks(self, instance: Instance, t: int) -> List[Tuple[str, int]]:
        return [
            key for key, span in self.task_periods(instance).items() if t in span
        ]


def task_start_range(
    project: Project, w: int, horizon_periods: int, tighten: bool
) -> range:
    """Feasible start periods of task index w (0-based).

    The task must complete inside its window; with tightening on, the chain
    of predecessor durations and minimal rests (and the room the successors
    need) narrows the range further.  Both reductions preserve every feasible
    schedule of the project.
    """
    lo, hi = project.task_window(w)
    duration = project.tasks[w].duration
    earliest, latest = lo, hi - duration + 1
    if tighten:
        head = sum(
            project.tasks[j].duration + (project.tasks[j].min_rest or 0)
            for j in range(w)
        )
        tail = sum(t.duration for t in project.tasks[w:]) + sum(
            (project.tasks[j].min_rest or 0) for j in range(w, project.task_count - 1)
        )
        plo, phi = project.window
        earliest = max(earliest, plo + head)
        latest = min(latest, phi - tail + 1)
    return range(earliest, latest + 1)


def build_upper_model(
    instance: Instance, config: Optional[UpperModelConfig] = None
) -> UpperModel:
    """Assemble the scheduling MIP for an instance.

    Start variables are binary; running variables are continuous in [0,1]
    (the linking rows force them integral).  Raises UpperBuildError when a
    task has no feasible start period while cancellation is off.
    """
    config = config or UpperModelConfig()
    config.check(allow_cancel=not config.force_schedule_all)
    horizon = instance.horizon
    T = horizon.period_count
    costs = instance.costs
    model = MipModel("upper")

    z_index: Dict[Tuple[str, int, int], int] = {}
    y_index: Dict[Tuple[str, int, int], int] = {}
    s_index: Dict[str, int] = {}
    e_index: Dict[Tuple[str, int], int] = {}
    start_ranges: Dict[Tuple[str, int], range] = {}

    for proj in instance.projects:
        for w in range(proj.task_count):
            starts = task_start_range(proj, w, T, config.tighten_start_windows)
            start_ranges[(proj.id, w + 1)] = starts
            if len(starts) == 0 and config.force_schedule_all:
                raise UpperBuildError(
                    f"project {proj.id} task {w + 1} has no feasible start period"
                )
            lo, hi = proj.task_window(w)
            for t in starts:
                z_index[(proj.id, w + 1, t)] = model.add_variable(
                    f"z({proj.id},{w + 1},{t})", 0.0, 1.0, 0.0, integer=True
                )
            for t in range(lo, hi + 1):
                y_index[(proj.id, w + 1, t)] = model.add_variable(
                    f"y({proj.id},{w + 1},{t})", 0.0, 1.0
                )
        s_index[proj.id] = model.add_variable(
            f"s({proj.id})",
            0.0,
            0.0 if config.force_schedule_all else 1.0,
            float(proj.cancel_cost),
            integer=True,
        )

    q_index = {
        res.id: model.add_variable(
            f"q({res.id})",
            float(config.resource_floors.get(res.id, 0)),
            INF,
            float(res.unit_cost),
        )
        for res in instance.resources
    }

    if config.include_event_time:
        for proj in instance.projects:
            for w in range(1, proj.task_count + 1):
                e_index[(proj.id, w)] = model.add_variable(f"e({proj.id},{w})", 0.0, float(T))

    xbm_index = {t: model.add_variable(f"xbm({t})", 0.0, INF) for t in horizon.periods()}
    disr = float(costs.disruption_cost_factor)
    zeta = float(costs.coordination)
    proxy = config.disruption_mode == "proxy"
    blb_index = model.add_variable(
        "B_lb",
        float(config.blocking_lower_bound or 0),
        INF,
        disr * zeta if proxy else 0.0,
    )
    bub_index = model.add_variable("B_ub", 0.0, INF, disr * (1.0 - zeta) if proxy else 0.0)

    xd_index: Dict[int, int] = {}
    if config.include_disturbed_period_vars:
        period_cost = config.external_period_costs or {}
        for t in horizon.periods():
            cost = float(period_cost.get(t, 0)) if config.disruption_mode == "external" else 0.0
            xd_index[t] = model.add_variable(f"xd({t})", 0.0, 1.0, cost, integer=True)

    # lagrangian term: lambda * (a + sum b y - C_nom); y coefficients folded in,
    # the rest is constant
    lagr = costs.lagrangian
    if lagr:
        constant = 0.0
        for (link, t), lam in lagr.items():
            a_lt = config.utilization.get((link, t), Fraction(0))
            constant += float(lam * (a_lt - instance.network.nominal_capacity[link]))
        model.add_objective_constant(constant)

    def z_of(pid: str, w: int, t: int) -> Optional[int]:
        return z_index.get((pid, w, t))

    def y_of(pid: str, w: int, t: int) -> Optional[int]:
        return y_index.get((pid, w, t))

    for proj in instance.projects:
        pid = proj.id
        plo, phi = proj.window
        W = proj.task_count
        for w in range(1, W + 1):
            task = proj.tasks[w - 1]
            wlo, whi = proj.task_window(w - 1)

            coeffs = [(z_index[(pid, w, t)], 1.0) for t in start_ranges[(pid, w)]]
            coeffs.append((s_index[pid], 1.0))
            model.add_row(f"once({pid},{w})", coeffs, EQUAL, 1.0)

            for t in range(wlo, whi + 1):
                terms = []
                zi = z_of(pid, w, t)
                if zi is not None:
                    terms.append((zi, 1.0))
                terms.append((y_index[(pid, w, t)], -1.0))
                prev = y_of(pid, w, t - 1)
                if prev is not None:
                    terms.append((prev, 1.0))
                model.add_row(f"start({pid},{w},{t})", terms, GREATER_EQUAL, 0.0)

                length_terms = []
                for i in range(1, min(task.duration, t) + 1):
                    zi = z_of(pid, w, t - i + 1)
                    if zi is not None:
                        length_terms.append((zi, 1.0))
                length_terms.append((y_index[(pid, w, t)], -1.0))
                model.add_row(f"length({pid},{w},{t})", length_terms, EQUAL, 0.0)

        for t in range(plo, phi + 1):
            terms = [
                (y_index[(pid, w, t)], 1.0)
                for w in range(1, W + 1)
                if (pid, w, t) in y_index
            ]
            if terms:
                model.add_row(f"overlap({pid},{t})", terms, LESS_EQUAL, 1.0)

        for w in range(1, W):
            followers = [w + 1] if config.order_pairs_only else range(w + 1, W + 1)
            for v in followers:
                for t in range(plo, phi + 1):
                    terms = []
                    for j in range(plo, t + 1):
                        zi = z_of(pid, w, j)
                        if zi is not None:
                            terms.append((zi, 1.0))
                        zj = z_of(pid, v, j)
                        if zj is not None:
                            terms.append((zj, -1.0))
                    if terms:
                        model.add_row(
                            f"order({pid},{w},{v},{t})", terms, GREATER_EQUAL, 0.0
                        )

        if config.include_rest_constraints:
            for w in range(1, W):
                task = proj.tasks[w - 1]
                gamma = task.min_rest or 0
                theta = task.max_rest
                for t in range(plo, phi + 1):
                    terms = []
                    for i in range(1, min(gamma, T - t) + 1):
                        zi = z_of(pid, w + 1, t + i)
                        if zi is not None:
                            terms.append((zi, 1.0))
                    for j in range(plo, t + 1):
                        zi = z_of(pid, w, j)
                        if zi is not None:
                            terms.append((zi, -1.0))
                    yi = y_of(pid, w, t)
                    if yi is not None:
                        terms.append((yi, 1.0))
                    if terms:
                        model.add_row(f"minrest({pid},{w},{t})", terms, LESS_EQUAL, 0.0)
                    if theta is None:
                        continue
                    terms = []
                    for i in range(1, min(theta, T - t) + 1):
                        zi = z_of(pid, w + 1, t + i)
                        if zi is not None:
                            terms.append((zi, 1.0))
                    for j in range(plo, t + 1):
                        zi = z_of(pid, w, j)
                        if zi is not None:
                            terms.append((zi, -1.0))
                        zj = z_of(pid, w + 1, j)
                        if zj is not None:
                            terms.append((zj, 1.0))
                    yi = y_of(pid, w, t)
                    if yi is not None:
                        terms.append((yi, -1.0))
                    if terms:
                        model.add_row(f"maxrest({pid},{w},{t})", terms, GREATER_EQUAL, 0.0)

        if config.include_event_time:
            for w in range(1, W + 1):
                terms = [(e_index[(pid, w)], 1.0)]
                for t in start_ranges[(pid, w)]:
                    terms.append((z_index[(pid, w, t)], -float(t)))
                model.add_row(f"event({pid},{w})", terms, EQUAL, 0.0)
            for w in range(1, W):
                task = proj.tasks[w - 1]
                gamma = task.min_rest or 0
                gap_min = task.duration + gamma
                model.add_row(
                    f"spacing_min({pid},{w})",
                    [
                        (e_index[(pid, w + 1)], 1.0),
                        (e_index[(pid, w)], -1.0),
                        (s_index[pid], float(gap_min)),
                    ],
                    GREATER_EQUAL,
                    float(gap_min),
                )
                if task.max_rest is None:
                    continue
                gap_max = task.duration + task.max_rest
                model.add_row(
                    f"spacing_max({pid},{w})",
                    [
                        (e_index[(pid, w + 1)], 1.0),
                        (e_index[(pid, w)], -1.0),
                        (s_index[pid], float(gap_max)),
                    ],
                    LESS_EQUAL,
                    float(gap_max),
                )

    for res in instance.resources:
        for t in horizon.periods():
            terms = []
            for proj in instance.projects:
                for w in range(1, proj.task_count + 1):
                    use = proj.tasks[w - 1].resource_use.get(res.id)
                    if use and (proj.id, w, t) in y_index:
                        terms.append((y_index[(proj.id, w, t)], float(use)))
            if terms:
                terms.append((q_index[res.id], -1.0))
                model.add_row(f"resuse({res.id},{t})", terms, LESS_EQUAL, 0.0)
        model.add_row(
            f"rescap({res.id})", [(q_index[res.id], 1.0)], LESS_EQUAL, float(res.available)
        )

    lagr_y: Dict[int, float] = {}
    for proj in instance.projects:
        pid = proj.id
        plo, phi = proj.window
        blocked_links = sorted(
            {link for task in proj.tasks for link in task.blockings},
        )
        for link in blocked_links:
            for t in range(plo, phi + 1):
                terms = []
                for w in range(1, proj.task_count + 1):
                    value = proj.tasks[w - 1].blockings.get(link)
                    if value and (pid, w, t) in y_index:
                        terms.append((y_index[(pid, w, t)], float(value)))
                if terms:
                    terms.append((xbm_index[t], -1.0))
                    model.add_row(
                        f"blockmax({pid},{link[0]}.{link[1]},{t})",
                        terms,
                        LESS_EQUAL,
                        0.0,
                    )
        if lagr:
            for w in range(1, proj.task_count + 1):
                task = proj.tasks[w - 1]
                for t in range(plo, phi + 1):
                    if (pid, w, t) not in y_index:
                        continue
                    weight = sum(
                        float(lagr.get((link, t), 0)) * float(value)
                        for link, value in task.blockings.items()
                    )
                    if weight:
                        lagr_y[y_index[(pid, w, t)]] = (
                            lagr_y.get(y_index[(pid, w, t)], 0.0) + weight
                        )

    for index, weight in lagr_y.items():
        model.variables[index].objective += weight

    total_terms = [(blb_index, 1.0)] + [(xbm_index[t], -1.0) for t in horizon.periods()]
    model.add_row("blocking_lb", total_terms, EQUAL, 0.0)
    ub_terms = [(bub_index, 1.0)]
    for proj in instance.projects:
        for w in range(1, proj.task_count + 1):
            total = proj.tasks[w - 1].total_blocking()
            if total:
                for t in range(proj.window[0], proj.window[1] + 1):
                    if (proj.id, w, t) in y_index:
                        ub_terms.append((y_index[(proj.id, w, t)], -float(total)))
    model.add_row("blocking_ub", ub_terms, EQUAL, 0.0)

    if config.include_disturbed_period_vars:
        for t in horizon.periods():
            cover = []
            for proj in instance.projects:
                for w in range(1, proj.task_count + 1):
                    yi = y_of(proj.id, w, t)
                    if yi is not None:
                        model.add_row(
                            f"disturbed({proj.id},{w},{t})",
                            [(yi, 1.0), (xd_index[t], -1.0)],
                            LESS_EQUAL,
                            0.0,
                        )
                        cover.append((yi, -1.0))
            model.add_row(
                f"disturbed_cover({t})", [(xd_index[t], 1.0)] + cover, LESS_EQUAL, 0.0
            )

    model.seal()
    return UpperModel(
        model=model,
        instance=instance,
        config=config,
        z_index=z_index,
        y_index=y_index,
        s_index=s_index,
        q_index=q_index,
        e_index=e_index,
        xbm_index=xbm_index,
        xd_index=xd_index,
        blb_index=blb_index,
        bub_index=bub_index,
        start_ranges=start_ranges,
    )


def proxy_disruption_cost(
    blocking_lb: Fraction, blocking_ub: Fraction, costs: CostConfig
) -> Fraction:
    """Coordination-weighted blocking cost: factor * (z*LB + (1-z)*UB)."""
    if blocking_lb > blocking_ub:
        raise ValueError("blocking lower bound exceeds the upper bound")
    zeta = costs.coordination
    return costs.disruption_cost_factor * (
        zeta * Fraction(blocking_lb) + (1 - zeta) * Fraction(blocking_ub)
    )


def schedule_blocking_bounds(
    instance: Instance, starts: Dict[Tuple[str, int], int]
) -> Tuple[Fraction, Fraction]:
    """Exact blocking bounds of a concrete schedule.

    The lower value assumes perfect coordination (per-period maximum over
    project/link blockings), the upper value no coordination at all (plain
    sum over everything active).
    """
    per_period: Dict[int, Fraction] = {}
    total = Fraction(0)
    for proj in instance.projects:
        for w in range(1, proj.task_count + 1):
            start = starts.get((proj.id, w))
            if start is None:
                continue
            task = proj.tasks[w - 1]
            total += task.total_blocking() * task.duration
            for t in range(start, start + task.duration):
                peak = task.max_blocking()
                if peak > per_period.get(t, Fraction(0)):
                    per_period[t] = peak
    return sum(per_period.values(), Fraction(0)), total


def decode_upper_solution(
    upper: UpperModel, assignment, tol: float = 1e-6
) -> UpperSolution:
    """Verify an assignment against the model and lift it into a schedule.

    assignment may be a SolveResult or a plain value vector.  All derived
    quantities are recomputed exactly from the schedule and compared against
    the solver's variable values within tol.
    """
    x = assignment.x if isinstance(assignment, SolveResult) else np.asarray(assignment, float)
    if x is None or len(x) != upper.model.n_variables:
        raise UpperDecodeError("assignment does not match the model")
    violated = upper.model.violations(x, tol)
    if violated:
        raise UpperDecodeError(f"assignment violates {violated[0]}")

    instance = upper.instance
    starts: Dict[Tuple[str, int], int] = {}
    canceled: Dict[str, bool] = {}
    for proj in instance.projects:
        canceled[proj.id] = x[upper.s_index[proj.id]] > 0.5
        for w in range(1, proj.task_count + 1):
            chosen = [
                t
                for t in upper.start_ranges[(proj.id, w)]
                if x[upper.z_index[(proj.id, w, t)]] > 0.5
            ]
            if canceled[proj.id]:
                if chosen:
                    raise UpperDecodeError(
                        f"project {proj.id} is canceled but task {w} has a start"
                    )
                continue
            if len(chosen) != 1:
                raise UpperDecodeError(
                    f"project {proj.id} task {w} has {len(chosen)} start periods"
                )
            starts[(proj.id, w)] = chosen[0]

    blocking_lb, blocking_ub = schedule_blocking_bounds(instance, starts)
    # the lower-bound variable equals the per-period maxima only when the
    # objective actually presses it down; otherwise it may float above
    pressed = upper.model.variables[upper.blb_index].objective > 0
    if pressed and abs(float(blocking_lb) - x[upper.blb_index]) > tol:
        raise UpperDecodeError(
            f"blocking lower bound mismatch: schedule says {blocking_lb}, "
            f"solver says {x[upper.blb_index]}"
        )
    if x[upper.blb_index] < float(blocking_lb) - tol:
        raise UpperDecodeError("blocking lower bound below the schedule's own value")
    if abs(float(blocking_ub) - x[upper.bub_index]) > tol:
        raise UpperDecodeError(
            f"blocking upper bound mismatch: schedule says {blocking_ub}, "
            f"solver says {x[upper.bub_index]}"
        )

    usage: Dict[str, Dict[int, Fraction]] = {res.id: {} for res in instance.resources}
    for (pid, w), start in starts.items():
        proj = next(p for p in instance.projects if p.id == pid)
        task = proj.tasks[w - 1]
        for rid, use in task.resource_use.items():
            for t in range(start, start + task.duration):
                usage[rid][t] = usage[rid].get(t, Fraction(0)) + use
    peaks = {
        rid: max(by_t.values(), default=Fraction(0)) for rid, by_t in usage.items()
    }
    for rid, peak in peaks.items():
        if x[upper.q_index[rid]] < float(peak) - tol:
            raise UpperDecodeError(f"resource {rid} peak exceeds reported usage")

    costs = instance.costs
    cancel_part = sum(
        (proj.cancel_cost for proj in instance.projects if canceled[proj.id]),
        Fraction(0),
    )
    q_values = {
        res.id: _snap(float(x[upper.q_index[res.id]])) for res in instance.resources
    }
    resource_part = sum(
        (res.unit_cost * q_values[res.id] for res in instance.resources), Fraction(0)
    )
    if upper.config.disruption_mode == "proxy":
        disruption_part = proxy_disruption_cost(blocking_lb, blocking_ub, costs)
    else:
        period_cost = upper.config.external_period_costs or {}
        disruption_part = sum(
            (
                Fraction(period_cost.get(t, 0))
                for t in upper.xd_index
                if x[upper.xd_index[t]] > 0.5
            ),
            Fraction(0),
        )
    lagrangian_part = Fraction(0)
    if costs.lagrangian:
        for (link, t), lam in costs.lagrangian.items():
            a_lt = upper.config.utilization.get((link, t), Fraction(0))
            active = sum(
                (
                    proj.tasks[w - 1].blockings.get(link, Fraction(0))
                    for (pid, w), start in starts.items()
                    for proj in (next(p for p in instance.projects if p.id == pid),)
                    if start <= t < start + proj.tasks[w - 1].duration
                ),
                Fraction(0),
            )
            lagrangian_part += lam * (
                a_lt + active - instance.network.nominal_capacity[link]
            )

    objective = cancel_part + resource_part + disruption_part + lagrangian_part
    solver_objective = upper.model.objective_value(x)
    if abs(float(objective) - solver_objective) > 1e-6 * max(1.0, abs(solver_objective)):
        raise UpperDecodeError(
            f"objective mismatch: recomputed {float(objective)}, solver {solver_objective}"
        )

    event_times = {
        key: _snap(float(x[index])) for key, index in upper.e_index.items()
    }
    disturbed = tuple(
        t for t, index in sorted(upper.xd_index.items()) if x[index] > 0.5
    )
    return UpperSolution(
        starts=starts,
        canceled=canceled,
        resource_peaks=peaks,
        q_values=q_values,
        blocking_lb=blocking_lb,
        blocking_ub=blocking_ub,
        objective_parts=(cancel_part, resource_part, disruption_part, lagrangian_part),
        objective=objective,
        event_times=event_times,
        disturbed_periods=disturbed,
        x=x,
    )
