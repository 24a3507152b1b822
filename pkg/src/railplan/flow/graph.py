"""Layered space-time graphs for the traffic-flow assignment LPs.

Two layerings are supported: one layer per train type (aggregated; compact
but lets relations of one type exchange identities) and one layer per
traffic relation (multi-commodity; larger but relation-faithful).  Within a
layer, transport arcs follow the network links and either stay inside one
period (direct) or spill into the next (forward); inventory arcs let flow
dwell at a node between consecutive periods.  Time only moves forward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..model import Instance, Link

TRAIN_TYPE = "train_type"
MULTI_COMMODITY = "multi_commodity"

DIRECT = "direct"
FORWARD = "forward"
INVENTORY = "inventory"


@dataclass(frozen=True)
class Arc:
    index: int
    layer: str  # train type id or relation id depending on the variant
    kind: str
    link: Optional[Link]  # transport arcs only
    node: Optional[str]  # inventory arcs only
    t_from: int
    t_to: int

    @property
    def tail(self) -> str:
        return self.link[0] if self.link else self.node  # type: ignore[index]

    @property
    def head(self) -> str:
        return self.link[1] if self.link else self.node  # type: ignore[index]


@dataclass
class SpaceTimeGraph:
    """Arc-indexed view of one flow-model variant over a period slice."""

    variant: str
    instance: Instance
    periods: range
    layers: Tuple[str, ...]
    layer_nodes: Dict[str, Tuple[str, ...]]
    layer_links: Dict[str, Tuple[Link, ...]]
    arcs: List[Arc] = field(default_factory=list)
    in_arcs: Dict[Tuple[str, int, str], List[int]] = field(default_factory=dict)
    out_arcs: Dict[Tuple[str, int, str], List[int]] = field(default_factory=dict)
    arcs_on_link: Dict[Link, List[int]] = field(default_factory=dict)
    arcs_on_link_layer: Dict[Tuple[Link, str], List[int]] = field(default_factory=dict)

    def layer_type(self, layer: str) -> str:
        """Train type a layer runs with (identity for the aggregated variant)."""
        if self.variant == TRAIN_TYPE:
            return layer
        relation = next(r for r in self.instance.relations if r.id == layer)
        return relation.train_type

    def vertex(self, node: str, t: int, layer: str) -> Tuple[str, int, str]:
        return (node, t, layer)

    def _register(self, arc: Arc) -> None:
        self.arcs.append(arc)
        tail = self.vertex(arc.tail, arc.t_from, arc.layer)
        head = self.vertex(arc.head, arc.t_to, arc.layer)
        self.out_arcs.setdefault(tail, []).append(arc.index)
        self.in_arcs.setdefault(head, []).append(arc.index)
        if arc.link is not None:
            self.arcs_on_link.setdefault(arc.link, []).append(arc.index)
            self.arcs_on_link_layer.setdefault((arc.link, arc.layer), []).append(arc.index)


@dataclass(frozen=True)
class GraphSizeAudit:
    """Construction counts next to the coarse closed-form size estimates.

    The formulas estimate the dominating families only: arc variables
    against 3*L*T*H (or 3*R*T*S), balance plus within-period share rows
    against 2*L*T*H (or 2*R*T*S).
    """

    variant: str
    arc_count: int
    balance_rows: int
    share_rows: int
    formula_variables: int
    formula_constraints: int

    @property
    def constraint_count(self) -> int:
        return self.balance_rows + self.share_rows

    @property
    def variable_ratio(self) -> float:
        return self.arc_count / self.formula_variables

    @property
    def constraint_ratio(self) -> float:
        return self.constraint_count / self.formula_constraints


def build_graph(
    instance: Instance,
    periods: Optional[Sequence[int]] = None,
    variant: str = MULTI_COMMODITY,
) -> SpaceTimeGraph:
    """Construct the layered space-time graph over a horizon slice.

    periods defaults to the instance's traffic frame.  In the
    multi-commodity variant each relation's layer is restricted to its
    allowed links and their endpoints; a relation whose allowed links hold
    no origin-destination path is rejected.
    """
    if periods is None:
        period_range = range(1, instance.traffic_frame() + 1)
    else:
        period_range = range(min(periods), max(periods) + 1)

    if variant == TRAIN_TYPE:
        layers = tuple(instance.train_types)
        layer_nodes = {h: instance.network.nodes for h in layers}
        layer_links = {h: instance.network.links for h in layers}
    elif variant == MULTI_COMMODITY:
        layers = tuple(r.id for r in instance.relations)
        layer_nodes = {}
        layer_links = {}
        for relation in instance.relations:
            if not relation.allowed_links:
                raise ValueError(
                    f"relation {relation.id} has no allowed links; cannot build its layer"
                )
            layer_nodes[relation.id] = relation.allowed_nodes()
            layer_links[relation.id] = relation.allowed_links
    else:
        raise ValueError(f"unknown graph variant {variant!r}")

    graph = SpaceTimeGraph(
        variant=variant,
        instance=instance,
        periods=period_range,
        layers=layers,
        layer_nodes=layer_nodes,
        layer_links=layer_links,
    )
    index = 0
    last = period_range[-1]
    for layer in layers:
        for link in layer_links[layer]:
            for t in period_range:
                graph._register(
                    Arc(index, layer, DIRECT, link, None, t, t)
                )
                index += 1
                if t < last:
                    graph._register(Arc(index, layer, FORWARD, link, None, t, t + 1))
                    index += 1
        for node in layer_nodes[layer]:
            for t in period_range:
                if t < last:
                    graph._register(Arc(index, layer, INVENTORY, None, node, t, t + 1))
                    index += 1
    return graph


def size_audit(graph: SpaceTimeGraph) -> GraphSizeAudit:
    """Compare generated sizes with the closed-form estimates."""
    T = len(graph.periods)
    balance = sum(len(graph.layer_nodes[layer]) for layer in graph.layers) * T
    share = sum(
        max(len(graph.layer_nodes[layer]) - 1, 0) if graph.variant == MULTI_COMMODITY
        else len(graph.layer_links[layer])
        for layer in graph.layers
    ) * T
    if graph.variant == TRAIN_TYPE:
        L = len(graph.instance.network.links)
        H = len(graph.layers)
        formula_vars = 3 * L * T * H
        formula_rows = 2 * L * T * H
    else:
        links_total = sum(len(graph.layer_links[layer]) for layer in graph.layers)
        formula_vars = 3 * links_total * T
        formula_rows = 2 * links_total * T
    return GraphSizeAudit(
        variant=graph.variant,
        arc_count=len(graph.arcs),
        balance_rows=balance,
        share_rows=share,
        formula_variables=formula_vars,
        formula_constraints=formula_rows,
    )
