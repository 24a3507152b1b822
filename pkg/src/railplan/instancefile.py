"""Reader and writer for the line-oriented instance document format.

The format is UTF-8 text: ``#`` starts a comment, tokens are whitespace
separated and sections are opened by a bracketed header::

    [horizon]    periods <int>  periods-per-day <int>
    [nodes]      <id> ...
    [links]      link <from> <to> capacity <rational>
    [traintypes] type <id>
                 nu <type> <from> <to> <rational>
    [relations]  relation <id> <o> <d> <type> demand <rational>
                   depart <t1> <t2>  arrive <t1> <t2>
                   links { <from>-<to> ... }  [reachable]
    [resources]  resource <id> avail <rational> cost <rational>
    [projects]   project <id> window <t1> <t2> cancel-cost <rational>
                   task len <int> rest <int|-> <int|->
                     use { <res>=<rational> ... } block { <from>-<to>=<rational> ... }
    [costs]      cdisr <rational> zeta <rational>
                 lower-weights cancel <r> inventory <r> time <r>

Rationals may be integers, decimals or ``p/q`` fractions and are kept exact.
Parsing then serializing then parsing again yields a value-identical instance.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .model import (
    CostConfig,
    Instance,
    Network,
    Project,
    Resource,
    TimeHorizon,
    TrafficRelation,
    TrainTypeParams,
    WorkTask,
)


class InstanceFormatError(ValueError):
    """Raised when an instance document cannot be parsed."""


def _tokenize(text: str) -> List[str]:
    tokens: List[str] = []
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        tokens.extend(body.split())
    return tokens


def _parse_rational(token: str, what: str) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceFormatError(f"bad rational for {what}: {token!r}") from exc


def _parse_int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise InstanceFormatError(f"bad integer for {what}: {token!r}") from exc


def _parse_link(token: str, what: str) -> Tuple[str, str]:
    if "-" not in token:
        raise InstanceFormatError(f"bad link for {what}: {token!r} (expected from-to)")
    a, b = token.split("-", 1)
    if not a or not b:
        raise InstanceFormatError(f"bad link for {what}: {token!r}")
    return (a, b)


class _Stream:
    """Token cursor with section awareness."""

    def __init__(self, tokens: List[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at_section(self) -> bool:
        tok = self.peek()
        return tok is not None and tok.startswith("[") and tok.endswith("]")

    def take(self, what: str) -> str:
        tok = self.peek()
        if tok is None:
            raise InstanceFormatError(f"unexpected end of document, expected {what}")
        self.pos += 1
        return tok

    def expect(self, keyword: str) -> None:
        tok = self.take(keyword)
        if tok != keyword:
            raise InstanceFormatError(f"expected {keyword!r}, found {tok!r}")

    def take_group(self, what: str) -> List[str]:
        """Consume a brace-delimited token group and return its payload."""
        self.expect("{")
        items: List[str] = []
        while True:
            tok = self.take(f"'}}' closing {what}")
            if tok == "}":
                return items
            items.append(tok)


def parse_instance(text: str, name: str = "") -> Instance:
    """Parse an instance document from text."""
    stream = _Stream(_tokenize(text))
    horizon: Optional[TimeHorizon] = None
    nodes: List[str] = []
    links: List[Tuple[str, str]] = []
    capacity: Dict[Tuple[str, str], Fraction] = {}
    type_order: List[str] = []
    shares: Dict[str, Dict[Tuple[str, str], Fraction]] = {}
    relations: List[TrafficRelation] = []
    resources: List[Resource] = []
    projects: List[Project] = []
    costs = CostConfig()

    while stream.peek() is not None:
        header = stream.take("section header")
        if not (header.startswith("[") and header.endswith("]")):
            raise InstanceFormatError(f"expected a section header, found {header!r}")
        section = header[1:-1]
        if section == "horizon":
            stream.expect("periods")
            periods = _parse_int(stream.take("period count"), "periods")
            stream.expect("periods-per-day")
            per_day = _parse_int(stream.take("periods-per-day"), "periods-per-day")
            horizon = TimeHorizon.unit(periods, per_day)
        elif section == "nodes":
            while stream.peek() is not None and not stream.at_section():
                nodes.append(stream.take("node id"))
        elif section == "links":
            while stream.peek() == "link":
                stream.expect("link")
                a = stream.take("link origin")
                b = stream.take("link target")
                stream.expect("capacity")
                cap = _parse_rational(stream.take("capacity"), f"capacity of {a}-{b}")
                links.append((a, b))
                capacity[(a, b)] = cap
            if stream.peek() is not None and not stream.at_section():
                raise InstanceFormatError(f"unexpected token in [links]: {stream.peek()!r}")
        elif section == "traintypes":
            while stream.peek() in ("type", "nu"):
                kind = stream.take("traintypes entry")
                if kind == "type":
                    tid = stream.take("train type id")
                    type_order.append(tid)
                    shares.setdefault(tid, {})
                else:
                    tid = stream.take("train type id")
                    a = stream.take("link origin")
                    b = stream.take("link target")
                    value = _parse_rational(
                        stream.take("traversal share"), f"nu of {tid} on {a}-{b}"
                    )
                    shares.setdefault(tid, {})[(a, b)] = value
            if stream.peek() is not None and not stream.at_section():
                raise InstanceFormatError(
                    f"unexpected token in [traintypes]: {stream.peek()!r}"
                )
        elif section == "relations":
            while stream.peek() == "relation":
                relations.append(_parse_relation(stream))
        elif section == "resources":
            while stream.peek() == "resource":
                stream.expect("resource")
                rid = stream.take("resource id")
                stream.expect("avail")
                avail = _parse_rational(stream.take("availability"), f"avail of {rid}")
                stream.expect("cost")
                cost = _parse_rational(stream.take("cost"), f"cost of {rid}")
                resources.append(Resource(rid, avail, cost))
        elif section == "projects":
            while stream.peek() == "project":
                projects.append(_parse_project(stream))
        elif section == "costs":
            costs = _parse_costs(stream)
        else:
            raise InstanceFormatError(f"unknown section [{section}]")

    if horizon is None:
        raise InstanceFormatError("missing [horizon] section")
    train_types = {tid: TrainTypeParams(tid, shares.get(tid, {})) for tid in type_order}
    for tid in shares:
        if tid not in train_types:
            raise InstanceFormatError(f"nu entry for undeclared train type {tid!r}")
    return Instance(
        horizon=horizon,
        network=Network(tuple(nodes), tuple(links), capacity),
        train_types=train_types,
        relations=tuple(relations),
        resources=tuple(resources),
        projects=tuple(projects),
        costs=costs,
        name=name,
    )


def _parse_relation(stream: _Stream) -> TrafficRelation:
    stream.expect("relation")
    rid = stream.take("relation id")
    origin = stream.take("origin")
    destination = stream.take("destination")
    train_type = stream.take("train type")
    stream.expect("demand")
    demand = _parse_rational(stream.take("demand"), f"demand of {rid}")
    stream.expect("depart")
    d1 = _parse_int(stream.take("depart start"), "depart start")
    d2 = _parse_int(stream.take("depart end"), "depart end")
    stream.expect("arrive")
    a1 = _parse_int(stream.take("arrive start"), "arrive start")
    a2 = _parse_int(stream.take("arrive end"), "arrive end")
    stream.expect("links")
    link_tokens = stream.take_group(f"links of relation {rid}")
    allowed = tuple(_parse_link(tok, f"relation {rid}") for tok in link_tokens)
    reachable = False
    if stream.peek() == "reachable":
        stream.take("reachable")
        reachable = True
    return TrafficRelation(
        id=rid,
        origin=origin,
        destination=destination,
        train_type=train_type,
        demand=demand,
        departure_window=(d1, d2),
        arrival_window=(a1, a2),
        allowed_links=allowed,
        requires_reachability=reachable,
    )


def _parse_project(stream: _Stream) -> Project:
    stream.expect("project")
    pid = stream.take("project id")
    stream.expect("window")
    w1 = _parse_int(stream.take("window start"), "window start")
    w2 = _parse_int(stream.take("window end"), "window end")
    stream.expect("cancel-cost")
    cancel = _parse_rational(stream.take("cancel cost"), f"cancel cost of {pid}")
    tasks: List[WorkTask] = []
    while stream.peek() == "task":
        stream.expect("task")
        stream.expect("len")
        duration = _parse_int(stream.take("task length"), "task length")
        stream.expect("rest")
        raw_min = stream.take("min rest")
        raw_max = stream.take("max rest")
        min_rest = None if raw_min == "-" else _parse_int(raw_min, "min rest")
        max_rest = None if raw_max == "-" else _parse_int(raw_max, "max rest")
        use: Dict[str, Fraction] = {}
        block: Dict[Tuple[str, str], Fraction] = {}
        while stream.peek() in ("use", "block"):
            clause = stream.take("task clause")
            items = stream.take_group(f"{clause} of project {pid}")
            for item in items:
                if "=" not in item:
                    raise InstanceFormatError(
                        f"bad {clause} entry {item!r} in project {pid}"
                    )
                key, raw = item.split("=", 1)
                value = _parse_rational(raw, f"{clause} value in {pid}")
                if clause == "use":
                    use[key] = value
                else:
                    block[_parse_link(key, f"blocking in {pid}")] = value
        tasks.append(
            WorkTask(
                duration=duration,
                min_rest=min_rest,
                max_rest=max_rest,
                blockings=block,
                resource_use=use,
            )
        )
    if not tasks:
        raise InstanceFormatError(f"project {pid} has no tasks")
    return Project(id=pid, tasks=tuple(tasks), window=(w1, w2), cancel_cost=cancel)


def _parse_costs(stream: _Stream) -> CostConfig:
    cdisr = CostConfig().disruption_cost_factor
    zeta = CostConfig().coordination
    weights = CostConfig().lower_weights
    while stream.peek() in ("cdisr", "zeta", "lower-weights"):
        keyword = stream.take("costs entry")
        if keyword == "cdisr":
            cdisr = _parse_rational(stream.take("cdisr"), "cdisr")
        elif keyword == "zeta":
            zeta = _parse_rational(stream.take("zeta"), "zeta")
        else:
            stream.expect("cancel")
            w_cancel = _parse_rational(stream.take("cancel weight"), "cancel weight")
            stream.expect("inventory")
            w_inv = _parse_rational(stream.take("inventory weight"), "inventory weight")
            stream.expect("time")
            w_time = _parse_rational(stream.take("time weight"), "time weight")
            weights = (w_cancel, w_inv, w_time)
    return CostConfig(
        disruption_cost_factor=cdisr, coordination=zeta, lower_weights=weights
    )


def _fmt(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def serialize_instance(instance: Instance) -> str:
    """Render an instance back into document form (canonical layout)."""
    out: List[str] = []
    hz = instance.horizon
    out.append("[horizon]")
    out.append(f"periods {hz.period_count}  periods-per-day {hz.periods_per_day}")
    out.append("")
    out.append("[nodes]")
    out.append(" ".join(instance.network.nodes))
    out.append("")
    out.append("[links]")
    for a, b in instance.network.links:
        cap = instance.network.nominal_capacity[(a, b)]
        out.append(f"link {a} {b} capacity {_fmt(cap)}")
    out.append("")
    out.append("[traintypes]")
    for tid, params in instance.train_types.items():
        out.append(f"type {tid}")
    for tid, params in instance.train_types.items():
        for (a, b), value in params.traversal_share.items():
            out.append(f"nu {tid} {a} {b} {_fmt(value)}")
    out.append("")
    out.append("[relations]")
    for rel in instance.relations:
        out.append(
            f"relation {rel.id} {rel.origin} {rel.destination} {rel.train_type} "
            f"demand {_fmt(rel.demand)}"
        )
        out.append(
            f"  depart {rel.departure_window[0]} {rel.departure_window[1]}"
            f"  arrive {rel.arrival_window[0]} {rel.arrival_window[1]}"
        )
        link_text = " ".join(f"{a}-{b}" for a, b in rel.allowed_links)
        suffix = "  reachable" if rel.requires_reachability else ""
        out.append(f"  links {{ {link_text} }}{suffix}")
    out.append("")
    out.append("[resources]")
    for res in instance.resources:
        out.append(
            f"resource {res.id} avail {_fmt(res.available)} cost {_fmt(res.unit_cost)}"
        )
    out.append("")
    out.append("[projects]")
    for proj in instance.projects:
        out.append(
            f"project {proj.id} window {proj.window[0]} {proj.window[1]} "
            f"cancel-cost {_fmt(proj.cancel_cost)}"
        )
        for task in proj.tasks:
            rmin = "-" if task.min_rest is None else str(task.min_rest)
            rmax = "-" if task.max_rest is None else str(task.max_rest)
            out.append(f"  task len {task.duration} rest {rmin} {rmax}")
            use_text = " ".join(
                f"{rid}={_fmt(val)}" for rid, val in task.resource_use.items()
            )
            block_text = " ".join(
                f"{a}-{b}={_fmt(val)}" for (a, b), val in task.blockings.items()
            )
            out.append(f"    use {{ {use_text} }} block {{ {block_text} }}")
    out.append("")
    out.append("[costs]")
    out.append(
        f"cdisr {_fmt(instance.costs.disruption_cost_factor)} "
        f"zeta {_fmt(instance.costs.coordination)}"
    )
    wc, wi, wt = instance.costs.lower_weights
    out.append(f"lower-weights cancel {_fmt(wc)} inventory {_fmt(wi)} time {_fmt(wt)}")
    out.append("")
    return "\n".join(out)


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return parse_instance(text, name=str(path))


def with_horizon(instance: Instance, period_count: int) -> Instance:
    """Copy of the instance rescaled to a horizon of ``period_count`` periods.

    Project (and task) windows that ended at the old final period stretch or
    shrink with the horizon; everything else is preserved.  Relation windows
    never move.
    """
    old_T = instance.horizon.period_count
    if period_count == old_T:
        return instance

    def remap(window: Tuple[int, int]) -> Tuple[int, int]:
        lo, hi = window
        if hi == old_T:
            hi = period_count
        hi = min(hi, period_count)
        lo = min(lo, hi)
        return (lo, hi)

    projects = []
    for proj in instance.projects:
        tasks = tuple(
            WorkTask(
                duration=t.duration,
                min_rest=t.min_rest,
                max_rest=t.max_rest,
                blockings=t.blockings,
                resource_use=t.resource_use,
                window=None if t.window is None else remap(t.window),
            )
            for t in proj.tasks
        )
        projects.append(
            Project(proj.id, tasks, remap(proj.window), proj.cancel_cost)
        )
    return Instance(
        horizon=TimeHorizon.unit(period_count, instance.horizon.periods_per_day),
        network=instance.network,
        train_types=instance.train_types,
        relations=instance.relations,
        resources=instance.resources,
        projects=tuple(projects),
        costs=instance.costs,
        name=instance.name,
    )
