"""Instance data model shared by the scheduling and traffic-flow levels.

Defines the immutable domain types (time horizon, network, traffic
relations, train-type traversal shares, renewal projects with their work
tasks, work resources, cost configuration) plus validation and a couple of
derived per-project quantities.  All rational inputs are kept as exact
`fractions.Fraction` values; solvers convert to floats on their own.

Instances are never mutated after construction, so any number of model
builders may share one instance concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

Link = Tuple[str, str]


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # decimal text should be parsed upstream; repr keeps this exact enough
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class TimeHorizon:
    """Discretized planning period: periods t = 1..period_count.

    period_starts[i] / period_lengths[i] hold the start and length of
    period i+1.  periods_per_day groups periods into operational days.
    """

    period_count: int
    period_starts: Tuple[Fraction, ...]
    period_lengths: Tuple[Fraction, ...]
    periods_per_day: int = 1

    @classmethod
    def unit(cls, period_count: int, periods_per_day: int = 1) -> "TimeHorizon":
        """Unit-length periods: period t starts at t-1 and has length 1."""
        starts = tuple(Fraction(t) for t in range(period_count))
        lengths = tuple(Fraction(1) for _ in range(period_count))
        return cls(period_count, starts, lengths, periods_per_day)

    def periods(self) -> range:
        return range(1, self.period_count + 1)

    def start(self, t: int) -> Fraction:
        return self.period_starts[t - 1]

    def length(self, t: int) -> Fraction:
        return self.period_lengths[t - 1]

    def day_of(self, t: int) -> int:
        """0-based day index of period t."""
        return (t - 1) // self.periods_per_day

    def day_count(self) -> int:
        d, rem = divmod(self.period_count, self.periods_per_day)
        return d + (1 if rem else 0)

    def has_partial_day(self) -> bool:
        return self.period_count % self.periods_per_day != 0

    def day_periods(self, day: int) -> range:
        lo = day * self.periods_per_day + 1
        hi = min((day + 1) * self.periods_per_day, self.period_count)
        return range(lo, hi + 1)


@dataclass(frozen=True)
class Network:
    """Directed railway network with per-link nominal capacity (trains/period)."""

    nodes: Tuple[str, ...]
    links: Tuple[Link, ...]
    nominal_capacity: Dict[Link, Fraction]

    def capacity(self, link: Link) -> Fraction:
        return self.nominal_capacity[link]


@dataclass(frozen=True)
class TrafficRelation:
    """Origin-destination traffic demand of one train type.

    demand is the number of trains to run; departure/arrival windows are
    inclusive period ranges; allowed_links restricts the usable sub-network.
    mandatory_link_sets lists groups of links of which at least one must be
    traversed (only meaningful when requires_reachability is set).
    """

    id: str
    origin: str
    destination: str
    train_type: str
    demand: Fraction
    departure_window: Tuple[int, int]
    arrival_window: Tuple[int, int]
    allowed_links: Tuple[Link, ...]
    requires_reachability: bool = False
    mandatory_link_sets: Tuple[Tuple[Link, ...], ...] = ()

    def allowed_nodes(self) -> Tuple[str, ...]:
        """Node set derived from allowed_links (endpoints, stable order)."""
        seen: List[str] = []
        for a, b in self.allowed_links:
            if a not in seen:
                seen.append(a)
            if b not in seen:
                seen.append(b)
        return tuple(seen)

    def departure_periods(self) -> range:
        return range(self.departure_window[0], self.departure_window[1] + 1)

    def arrival_periods(self) -> range:
        return range(self.arrival_window[0], self.arrival_window[1] + 1)


@dataclass(frozen=True)
class TrainTypeParams:
    """Per-train-type traversal shares: fraction of a period needed per link.

    traversal_share holds the period-independent value; per-period overrides
    can be supplied through traversal_share_by_period.
    """

    id: str
    traversal_share: Dict[Link, Fraction]
    traversal_share_by_period: Dict[Tuple[Link, int], Fraction] = field(default_factory=dict)

    def share(self, link: Link, t: Optional[int] = None) -> Fraction:
        if t is not None:
            override = self.traversal_share_by_period.get((link, t))
            if override is not None:
                return override
        return self.traversal_share[link]

    def knows(self, link: Link) -> bool:
        return link in self.traversal_share


@dataclass(frozen=True)
class WorkTask:
    """One work task of a renewal project.

    duration is in periods; min_rest/max_rest bound the gap to the next
    task (absent on the last task).  blockings gives train slots removed
    per period and link while the task runs; resource_use the resource
    quantities it occupies.  window optionally narrows the project window.
    """

    duration: int
    min_rest: Optional[int] = None
    max_rest: Optional[int] = None
    blockings: Dict[Link, Fraction] = field(default_factory=dict)
    resource_use: Dict[str, Fraction] = field(default_factory=dict)
    window: Optional[Tuple[int, int]] = None

    def max_blocking(self) -> Fraction:
        return max(self.blockings.values(), default=Fraction(0))

    def total_blocking(self) -> Fraction:
        return sum(self.blockings.values(), Fraction(0))


@dataclass(frozen=True)
class Project:
    """Ordered sequence of work tasks with a scheduling window."""

    id: str
    tasks: Tuple[WorkTask, ...]
    window: Tuple[int, int]
    cancel_cost: Fraction = Fraction(1000)

    @property
    def task_count(self) -> int:
        return len(self.tasks)

    def task_window(self, w: int) -> Tuple[int, int]:
        """Effective window of task index w (0-based); defaults to the project window."""
        task = self.tasks[w]
        if task.window is None:
            return self.window
        lo = max(task.window[0], self.window[0])
        hi = min(task.window[1], self.window[1])
        return (lo, hi)


@dataclass(frozen=True)
class Resource:
    id: str
    available: Fraction
    unit_cost: Fraction


@dataclass(frozen=True)
class CostConfig:
    """Cost parameters for both levels.

    coordination weighs the best-case against the worst-case blocking count
    in the disruption proxy; lagrangian holds optional per-link-period
    multipliers (zero and therefore inert by default); lower_weights are the
    flow-objective weights (cancellations, node inventory, travel time).
    """

    disruption_cost_factor: Fraction = Fraction(1, 10)
    coordination: Fraction = Fraction(3, 4)
    lagrangian: Dict[Tuple[Link, int], Fraction] = field(default_factory=dict)
    lower_weights: Tuple[Fraction, Fraction, Fraction] = (
        Fraction(10),
        Fraction(1, 10),
        Fraction(1),
    )


@dataclass(frozen=True)
class Instance:
    """A complete problem instance; the single input document of the toolkit."""

    horizon: TimeHorizon
    network: Network
    train_types: Dict[str, TrainTypeParams]
    relations: Tuple[TrafficRelation, ...]
    resources: Tuple[Resource, ...]
    projects: Tuple[Project, ...]
    costs: CostConfig = field(default_factory=CostConfig)
    name: str = ""

    def resource_ids(self) -> Tuple[str, ...]:
        return tuple(r.id for r in self.resources)

    def resource(self, rid: str) -> Resource:
        for r in self.resources:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def traffic_frame(self) -> int:
        """Length of one traffic day at the lower level.

        The smallest horizon prefix covering all relation windows plus one
        trailing period so forward flows out of the last arrival period have
        somewhere to land.
        """
        if not self.relations:
            return min(self.horizon.period_count, 1)
        last = max(r.arrival_window[1] for r in self.relations)
        return min(self.horizon.period_count, last + 1)


@dataclass
class ValidationReport:
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        lines = [f"errors: {len(self.errors)}", f"warnings: {len(self.warnings)}"]
        lines += [f"  error: {e}" for e in self.errors]
        lines += [f"  warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def project_span_bounds(project: Project) -> Tuple[int, int]:
    """Minimal and maximal number of periods a scheduled project occupies.

    min span sums task durations plus minimal rests, max span durations plus
    maximal rests (rest entries of the last task are ignored).
    """
    durations = sum(t.duration for t in project.tasks)
    min_rest = sum(t.min_rest or 0 for t in project.tasks[:-1])
    max_rest = sum(
        (t.max_rest if t.max_rest is not None else (t.min_rest or 0))
        for t in project.tasks[:-1]
    )
    return durations + min_rest, durations + max_rest


def per_project_min_blocking(project: Project) -> Fraction:
    """Lower bound on the blocking count any schedule of the project incurs.

    Each task contributes duration times its largest single-link blocking,
    which is what the per-period blocking maximum picks up while the task runs.
    """
    return sum((t.max_blocking() * t.duration for t in project.tasks), Fraction(0))


def _has_path(origin: str, destination: str, links) -> bool:
    adjacency: Dict[str, List[str]] = {}
    for a, b in links:
        adjacency.setdefault(a, []).append(b)
    seen = {origin}
    stack = [origin]
    while stack:
        node = stack.pop()
        if node == destination:
            return True
        for nxt in adjacency.get(node, ()):  # noqa: B007
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def validate_instance(instance: Instance) -> ValidationReport:
    """Check an instance document; errors are blocking, warnings advisory.

    Solvers must refuse instances whose report carries errors.  The check is
    pure: the same instance always yields the identical report.
    """
    report = ValidationReport()
    err = report.errors.append
    warn = report.warnings.append
    horizon = instance.horizon
    T = horizon.period_count

    if T < 1:
        err("horizon must contain at least one period")
    if horizon.periods_per_day < 1:
        err("periods-per-day must be positive")
    if len(horizon.period_starts) != T or len(horizon.period_lengths) != T:
        err("horizon start/length vectors do not match the period count")
    else:
        if horizon.period_starts and horizon.period_starts[0] != 0:
            err("first period must start at time 0")
        for i in range(T):
            if horizon.period_lengths[i] <= 0:
                err(f"period {i + 1} has non-positive length")
            if i + 1 < T and horizon.period_starts[i + 1] != (
                horizon.period_starts[i] + horizon.period_lengths[i]
            ):
                err(f"period {i + 2} does not start where period {i + 1} ends")
    if horizon.has_partial_day():
        warn(
            f"horizon of {T} periods is not a multiple of periods-per-day"
            f" {horizon.periods_per_day}; the last day is partial"
        )

    net = instance.network
    node_set = set(net.nodes)
    if len(node_set) != len(net.nodes):
        err("duplicate node identifiers")
    link_set = set(net.links)
    if len(link_set) != len(net.links):
        err("duplicate directed links")
    for a, b in net.links:
        if a not in node_set or b not in node_set:
            err(f"link {a}-{b} references an unknown node")
    for link, cap in net.nominal_capacity.items():
        if link not in link_set:
            err(f"capacity given for unknown link {link[0]}-{link[1]}")
        if cap < 0:
            err(f"negative capacity on link {link[0]}-{link[1]}")
    for link in net.links:
        if link not in net.nominal_capacity:
            err(f"missing capacity for link {link[0]}-{link[1]}")

    for type_id, params in instance.train_types.items():
        for (link, share) in params.traversal_share.items():
            if link not in link_set:
                err(f"traversal share of type {type_id} on unknown link {link[0]}-{link[1]}")
            if not (0 < share < 1):
                err(
                    f"traversal share of type {type_id} on {link[0]}-{link[1]}"
                    f" must lie strictly between 0 and 1 (got {share})"
                )

    seen_relations = set()
    for rel in instance.relations:
        if rel.id in seen_relations:
            err(f"duplicate relation id {rel.id}")
        seen_relations.add(rel.id)
        if rel.origin == rel.destination:
            err(f"relation {rel.id}: origin equals destination")
        if rel.origin not in node_set or rel.destination not in node_set:
            err(f"relation {rel.id}: unknown origin or destination node")
        if rel.train_type not in instance.train_types:
            err(f"relation {rel.id}: unknown train type {rel.train_type}")
        if rel.demand < 0:
            err(f"relation {rel.id}: negative demand")
        bad_links = [l for l in rel.allowed_links if l not in link_set]
        for a, b in bad_links:
            err(f"relation {rel.id}: allowed link {a}-{b} is not in the network")
        if not bad_links and not _has_path(rel.origin, rel.destination, rel.allowed_links):
            err(f"relation {rel.id}: allowed links contain no path "
                f"{rel.origin} -> {rel.destination}")
        to1, to2 = rel.departure_window
        td1, td2 = rel.arrival_window
        if not (1 <= to1 <= to2 <= T) or not (1 <= td1 <= td2 <= T):
            err(f"relation {rel.id}: departure/arrival window outside the horizon")
        if to1 > td1 or to2 > td2:
            err(f"relation {rel.id}: departure window must not trail the arrival window")
        params = instance.train_types.get(rel.train_type)
        if params is not None:
            for link in rel.allowed_links:
                if link in link_set and not params.knows(link):
                    err(
                        f"relation {rel.id}: no traversal share of type "
                        f"{rel.train_type} for link {link[0]}-{link[1]}"
                    )
        for group in rel.mandatory_link_sets:
            for link in group:
                if link not in rel.allowed_links:
                    err(f"relation {rel.id}: mandatory link {link[0]}-{link[1]}"
                        " is not among the allowed links")

    # flow-continuity check: consecutive links usable by a type should fit in one period
    for rel in instance.relations:
        params = instance.train_types.get(rel.train_type)
        if params is None:
            continue
        incoming: Dict[str, List[Link]] = {}
        for link in rel.allowed_links:
            incoming.setdefault(link[1], []).append(link)
        for link in rel.allowed_links:
            for prev in incoming.get(link[0], ()):  # noqa: B007
                if not (params.knows(prev) and params.knows(link)):
                    continue
                if params.share(prev) + params.share(link) > 1:
                    warn(
                        f"traversal shares of type {rel.train_type} on consecutive links "
                        f"{prev[0]}-{prev[1]} and {link[0]}-{link[1]} exceed one period; "
                        "within-period flow over the pair is impossible"
                    )

    resource_ids = set()
    for res in instance.resources:
        if res.id in resource_ids:
            err(f"duplicate resource id {res.id}")
        resource_ids.add(res.id)
        if res.available < 0:
            err(f"resource {res.id}: negative availability")
        if res.unit_cost < 0:
            err(f"resource {res.id}: negative unit cost")

    seen_projects = set()
    for proj in instance.projects:
        if proj.id in seen_projects:
            err(f"duplicate project id {proj.id}")
        seen_projects.add(proj.id)
        if proj.task_count < 1:
            err(f"project {proj.id}: needs at least one task")
            continue
        if proj.cancel_cost < 0:
            err(f"project {proj.id}: negative cancel cost")
        lo, hi = proj.window
        if not (1 <= lo <= hi <= T):
            err(f"project {proj.id}: window [{lo}, {hi}] outside the horizon")
        for w, task in enumerate(proj.tasks, start=1):
            last = w == proj.task_count
            if task.duration < 1:
                err(f"project {proj.id} task {w}: duration must be at least 1")
            if last and (task.min_rest is not None or task.max_rest is not None):
                warn(f"project {proj.id}: rest times on the last task are ignored")
            if not last and task.min_rest is None:
                err(f"project {proj.id} task {w}: missing min rest time")
            if (
                task.min_rest is not None
                and task.max_rest is not None
                and task.min_rest > task.max_rest
            ):
                err(f"project {proj.id} task {w}: min rest exceeds max rest")
            if task.window is not None:
                tlo, thi = task.window
                if tlo < lo or thi > hi or tlo > thi:
                    err(f"project {proj.id} task {w}: task window outside project window")
            for link in task.blockings:
                if link not in link_set:
                    err(f"project {proj.id} task {w}: blocking on unknown link "
                        f"{link[0]}-{link[1]}")
            for link, value in task.blockings.items():
                if value < 0:
                    err(f"project {proj.id} task {w}: negative blocking value")
            for rid, use in task.resource_use.items():
                if rid not in resource_ids:
                    err(f"project {proj.id} task {w}: unknown resource {rid}")
                if use < 0:
                    err(f"project {proj.id} task {w}: negative resource use")
        min_span, _ = project_span_bounds(proj)
        window_len = proj.window[1] - proj.window[0] + 1
        if min_span > window_len:
            err(
                f"project {proj.id}: window of length {window_len} cannot hold the "
                f"minimal span of {min_span} periods"
            )

    for res in instance.resources:
        peak = max(
            (
                task.resource_use.get(res.id, Fraction(0))
                for proj in instance.projects
                for task in proj.tasks
            ),
            default=Fraction(0),
        )
        if peak > res.available:
            warn(
                f"resource {res.id}: availability {res.available} below the largest "
                f"single-task use {peak}; schedules needing that task are infeasible"
            )

    costs = instance.costs
    if not (0 <= costs.coordination <= 1):
        err(f"coordination out of [0,1] (got {costs.coordination})")
    if costs.disruption_cost_factor < 0:
        err("negative disruption cost factor")
    for (link, t), lam in costs.lagrangian.items():
        if lam < 0:
            err(f"negative lagrangian multiplier on {link[0]}-{link[1]} period {t}")
        if link not in link_set or not (1 <= t <= T):
            err(f"lagrangian multiplier on unknown link/period {link}, {t}")
    for w in costs.lower_weights:
        if w < 0:
            err("lower-level objective weights must be nonnegative")

    return report
