"""Domain model for multi-modal logistics service networks.

A network is a set of city nodes, directed arcs between them, and transport
services (air / rail / water) running fixed routes.  The atomic routing
element is the *service-arc*: a specific service traversing a specific arc,
carrying a nominal travel time, a maximum travel-time deviation, and a
per-unit transport cost.  Orders of a single perishable product are shipped
from one shared origin to per-client destinations; itineraries may switch
service at any node against a per-unit transshipment fee.

This module holds the immutable domain types, the instance JSON format,
instance validation, and the transshipment-expanded search graph used by the
itinerary solvers.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

Node = int | str

MODES = ("air", "rail", "water")


@dataclass(frozen=True)
class Service:
    """A transport service: one mode running a fixed, directed route."""

    id: str
    mode: str
    route: tuple[Node, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "route", tuple(self.route))

    def route_arcs(self) -> list[tuple[Node, Node]]:
        return list(zip(self.route[:-1], self.route[1:]))


@dataclass(frozen=True)
class ServiceArc:
    """One service traversing one directed arc.

    ``index`` is the position of the service-arc in the owning network's
    ``service_arcs`` list; instance files, disruption profiles and solution
    files all refer to service-arcs by this index.
    """

    index: int
    service: str
    from_node: Node
    to_node: Node
    nominal_time: float
    max_deviation: float
    unit_cost: float


@dataclass(frozen=True)
class ServiceNetwork:
    nodes: frozenset[Node]
    arcs: frozenset[tuple[Node, Node]]
    services: tuple[Service, ...]
    service_arcs: tuple[ServiceArc, ...]
    origin: Node

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "arcs", frozenset(tuple(a) for a in self.arcs))
        object.__setattr__(self, "services", tuple(self.services))
        object.__setattr__(self, "service_arcs", tuple(self.service_arcs))

    def service_by_id(self, sid: str) -> Service:
        for s in self.services:
            if s.id == sid:
                return s
        raise KeyError(f"unknown service id {sid!r}")

    def arcs_from(self, node: Node) -> list[ServiceArc]:
        return [a for a in self.service_arcs if a.from_node == node]

    def arcs_into(self, node: Node) -> list[ServiceArc]:
        return [a for a in self.service_arcs if a.to_node == node]

    def sorted_nodes(self) -> list[Node]:
        # Stable node ordering usable for variable naming (mixed int/str safe).
        return sorted(self.nodes, key=lambda n: (isinstance(n, str), str(n)))


@dataclass(frozen=True)
class ClientOrder:
    client: str
    destination: Node
    quantity: float
    due_date: float


@dataclass(frozen=True)
class CostParams:
    """Product and cost parameters shared by every client.

    ``transshipment_cost`` maps ``(node, from_service, to_service)`` to the
    per-unit fee for switching services at that node.  Staying aboard the
    same service is never a transshipment and always costs zero.
    """

    product_value: float
    degradation_rate_per_day: float
    early_penalty_per_day: float
    late_penalty_per_day: float
    shelf_life: float
    transshipment_cost: Mapping[tuple[Node, str, str], float] = field(default_factory=dict)

    @property
    def degradation_per_unit_day(self) -> float:
        return self.product_value * self.degradation_rate_per_day

    def transfer_cost(self, node: Node, s1: str, s2: str, default: float | None = None) -> float:
        if s1 == s2:
            return 0.0
        key = (node, s1, s2)
        if key in self.transshipment_cost:
            return float(self.transshipment_cost[key])
        if default is not None:
            return default
        raise KeyError(f"no transshipment cost for services {s1!r}->{s2!r} at node {node!r}")


@dataclass(frozen=True)
class DisruptionProfile:
    """The uncertain service-arc subset, its deviation rate, and budget.

    The profile is the single authority on travel-time deviations: a
    service-arc whose index is in ``uncertain_arcs`` may be delayed by up to
    ``deviation_rate`` times its nominal time, every other service-arc is
    certain.  ``budget`` caps the total fractional deviation the adversary
    may spend across one client's itinerary.
    """

    uncertain_arcs: frozenset[int]
    deviation_rate: float
    budget: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "uncertain_arcs", frozenset(self.uncertain_arcs))

    def effective_deviation(self, arc: ServiceArc) -> float:
        if arc.index in self.uncertain_arcs:
            return self.deviation_rate * arc.nominal_time
        return 0.0


def nominal_profile(budget: float = 0.0) -> DisruptionProfile:
    """Profile with no uncertain service-arcs (deterministic travel times)."""
    return DisruptionProfile(uncertain_arcs=frozenset(), deviation_rate=0.0, budget=budget)


def materialize_deviations(net: ServiceNetwork, profile: DisruptionProfile) -> ServiceNetwork:
    """Rewrite every service-arc's ``max_deviation`` per the profile."""
    arcs = tuple(
        replace(a, max_deviation=profile.effective_deviation(a)) for a in net.service_arcs
    )
    return replace(net, service_arcs=arcs)


@dataclass(frozen=True)
class Instance:
    """A complete solvable problem: network, orders, costs, disruption."""

    network: ServiceNetwork
    orders: tuple[ClientOrder, ...]
    costs: CostParams
    disruption: DisruptionProfile

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", tuple(self.orders))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    findings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, msg: str) -> None:
        self.findings.append(msg)

    def __str__(self) -> str:
        if self.ok:
            return "instance well-formed"
        return "\n".join(f"- {f}" for f in self.findings)


def nominal_shortest_times(net: ServiceNetwork) -> dict[Node, float]:
    """Minimum nominal travel time from the origin to every node.

    Transshipment takes no time in this model, so a node-level Dijkstra over
    service-arcs is exact.
    """
    out: dict[Node, list[ServiceArc]] = {}
    for a in net.service_arcs:
        out.setdefault(a.from_node, []).append(a)
    dist: dict[Node, float] = {net.origin: 0.0}
    heap: list[tuple[float, int, Node]] = [(0.0, 0, net.origin)]
    tick = 0
    while heap:
        d, _, node = heapq.heappop(heap)
        if d > dist.get(node, float("inf")):
            continue
        for a in out.get(node, ()):
            nd = d + a.nominal_time
            if nd < dist.get(a.to_node, float("inf")) - 1e-15:
                dist[a.to_node] = nd
                tick += 1
                heapq.heappush(heap, (nd, tick, a.to_node))
    return dist


def validate_network(
    net: ServiceNetwork,
    orders: Iterable[ClientOrder],
    costs: CostParams,
    profile: DisruptionProfile | None = None,
) -> ValidationReport:
    """Check every structural invariant; the report lists all violations.

    An empty report means the instance is well-formed.
    """
    rep = ValidationReport()
    orders = list(orders)

    if net.origin not in net.nodes:
        rep.add(f"origin {net.origin!r} not in nodes")

    service_ids = [s.id for s in net.services]
    if len(set(service_ids)) != len(service_ids):
        rep.add("duplicate service ids")
    known_services = set(service_ids)

    for s in net.services:
        if len(s.route) < 2:
            rep.add(f"service {s.id!r}: route shorter than 2 nodes")
        if len(set(s.route)) != len(s.route):
            rep.add(f"service {s.id!r}: repeated node in route")
        if s.mode not in MODES:
            rep.add(f"service {s.id!r}: unknown mode {s.mode!r}")
        for n in s.route:
            if n not in net.nodes:
                rep.add(f"service {s.id!r}: route node {n!r} not in nodes")
        for i, j in s.route_arcs():
            if (i, j) not in net.arcs:
                rep.add(f"service {s.id!r}: route arc ({i!r},{j!r}) not in arcs")

    for i, j in net.arcs:
        if i not in net.nodes or j not in net.nodes:
            rep.add(f"arc ({i!r},{j!r}) references unknown node")
        if i == j:
            rep.add(f"arc ({i!r},{j!r}) is a self-loop")

    seen: set[tuple[str, Node, Node]] = set()
    per_service_arcs: dict[str, set[tuple[Node, Node]]] = {s: set() for s in known_services}
    for pos, a in enumerate(net.service_arcs):
        label = f"service-arc {a.index} ({a.service!r},{a.from_node!r},{a.to_node!r})"
        if a.index != pos:
            rep.add(f"{label}: index does not match its position {pos}")
        if a.service not in known_services:
            rep.add(f"{label}: unknown service")
        if a.from_node not in net.nodes or a.to_node not in net.nodes:
            rep.add(f"{label}: endpoint not in nodes")
        if (a.from_node, a.to_node) not in net.arcs:
            rep.add(f"{label}: arc not in arcs")
        key = (a.service, a.from_node, a.to_node)
        if key in seen:
            rep.add(f"{label}: duplicate service-arc")
        seen.add(key)
        if a.service in per_service_arcs:
            per_service_arcs[a.service].add((a.from_node, a.to_node))
        if a.nominal_time <= 0:
            rep.add(f"{label}: nominal_time must be > 0")
        if a.max_deviation < 0:
            rep.add(f"{label}: max_deviation must be >= 0")
        if a.unit_cost < 0:
            rep.add(f"{label}: unit_cost must be >= 0")

    # Route/service-arc correspondence in both directions.
    for s in net.services:
        route_pairs = set(s.route_arcs())
        listed = per_service_arcs.get(s.id, set())
        for pair in route_pairs - listed:
            rep.add(f"service {s.id!r}: route arc {pair!r} has no service-arc")
        for pair in listed - route_pairs:
            rep.add(f"service {s.id!r}: service-arc {pair!r} not on its route")

    if costs.degradation_per_unit_day < 0:
        rep.add("degradation cost must be >= 0")
    if costs.early_penalty_per_day < 0 or costs.late_penalty_per_day < 0:
        rep.add("delivery penalties must be >= 0")
    if costs.shelf_life <= 0:
        rep.add("shelf_life must be > 0")
    for (node, s1, s2), fee in costs.transshipment_cost.items():
        if fee < 0:
            rep.add(f"transshipment cost at {node!r} ({s1!r}->{s2!r}) is negative")
        if s1 == s2 and fee != 0:
            rep.add(f"transshipment cost at {node!r} for identical service {s1!r} must be 0")

    # Transfer fees must exist wherever a transfer is structurally possible.
    incoming_services: dict[Node, set[str]] = {}
    outgoing_services: dict[Node, set[str]] = {}
    for a in net.service_arcs:
        incoming_services.setdefault(a.to_node, set()).add(a.service)
        outgoing_services.setdefault(a.from_node, set()).add(a.service)
    for node, into in incoming_services.items():
        for s1 in into:
            for s2 in outgoing_services.get(node, set()):
                if s1 == s2:
                    continue
                if (node, s1, s2) not in costs.transshipment_cost:
                    rep.add(f"missing transshipment cost at {node!r} for {s1!r}->{s2!r}")

    times = nominal_shortest_times(net)
    client_ids = [o.client for o in orders]
    if len(set(client_ids)) != len(client_ids):
        rep.add("duplicate client ids")
    for o in orders:
        if o.destination not in net.nodes:
            rep.add(f"client {o.client!r}: destination {o.destination!r} not in nodes")
        elif o.destination == net.origin:
            rep.add(f"client {o.client!r}: destination equals origin")
        elif o.destination not in times:
            rep.add(f"client {o.client!r}: unreachable destination {o.destination!r}")
        elif times[o.destination] > costs.shelf_life + 1e-9:
            rep.add(
                f"client {o.client!r}: destination {o.destination!r} unreachable "
                f"within shelf life under nominal times"
            )
        if o.quantity <= 0:
            rep.add(f"client {o.client!r}: quantity must be > 0")
        if not 0 < o.due_date <= costs.shelf_life:
            rep.add(f"client {o.client!r}: due date must lie in (0, shelf_life]")

    if profile is not None:
        n_arcs = len(net.service_arcs)
        for k in sorted(profile.uncertain_arcs):
            if not 0 <= k < n_arcs:
                rep.add(f"disruption: uncertain service-arc index {k} out of range")
        if profile.deviation_rate < 0:
            rep.add("disruption: deviation_rate must be >= 0")
        if profile.budget < 0:
            rep.add("disruption: budget must be >= 0")
        for a in net.service_arcs:
            expected = profile.effective_deviation(a)
            if abs(a.max_deviation - expected) > 1e-9:
                rep.add(
                    f"service-arc {a.index}: stored max_deviation {a.max_deviation} "
                    f"inconsistent with disruption profile (expected {expected})"
                )

    return rep


def validate_instance(inst: Instance) -> ValidationReport:
    return validate_network(inst.network, inst.orders, inst.costs, inst.disruption)


# ---------------------------------------------------------------------------
# Transshipment-expanded search graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpandedGraph:
    """Directed graph over service-arc states.

    A virtual source precedes every service-arc leaving the origin; a path
    terminates at any state whose head node is the wanted destination
    (virtual per-destination sinks).  Each state-to-state edge carries the
    per-unit transshipment fee of switching from the first arc's service to
    the second's at their shared node, zero when the service is unchanged.
    Itineraries correspond one-to-one to source-to-sink paths that repeat no
    city node.
    """

    net: ServiceNetwork
    origin_arcs: tuple[int, ...]
    successors: dict[int, tuple[tuple[int, float], ...]]

    def simple_paths(self, destination: Node) -> Iterable[tuple[int, ...]]:
        """Yield all node-simple itineraries to ``destination``, in
        lexicographic order of service-arc index sequences."""
        arcs = self.net.service_arcs
        path: list[int] = []

        def extend(k: int, visited: set[Node]):
            path.append(k)
            head = arcs[k].to_node
            if head == destination:
                yield tuple(path)
            else:
                visited.add(head)
                for nxt, _fee in self.successors[k]:
                    if arcs[nxt].to_node not in visited:
                        yield from extend(nxt, visited)
                visited.discard(head)
            path.pop()

        visited = {self.net.origin}
        for k in self.origin_arcs:
            yield from extend(k, visited)

    def path_transfer_cost(self, path: Iterable[int]) -> float:
        """Accumulated per-unit transshipment fee along an itinerary."""
        fee = 0.0
        prev: int | None = None
        for k in path:
            if prev is not None:
                for nxt, edge_fee in self.successors[prev]:
                    if nxt == k:
                        fee += edge_fee
                        break
                else:
                    raise ValueError(f"service-arcs {prev} -> {k} do not chain")
            prev = k
        return fee


def build_search_graph(net: ServiceNetwork, costs: CostParams) -> ExpandedGraph:
    """Expand the service network into the service-arc state graph."""
    origin_arcs = tuple(sorted(a.index for a in net.service_arcs if a.from_node == net.origin))
    by_tail: dict[Node, list[ServiceArc]] = {}
    for a in net.service_arcs:
        by_tail.setdefault(a.from_node, []).append(a)
    successors: dict[int, tuple[tuple[int, float], ...]] = {}
    for a in net.service_arcs:
        nxt: list[tuple[int, float]] = []
        for b in sorted(by_tail.get(a.to_node, ()), key=lambda x: x.index):
            fee = costs.transfer_cost(a.to_node, a.service, b.service)
            nxt.append((b.index, fee))
        successors[a.index] = tuple(nxt)
    return ExpandedGraph(net=net, origin_arcs=origin_arcs, successors=successors)


# ---------------------------------------------------------------------------
# Instance JSON format
# ---------------------------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    net, costs = inst.network, inst.costs
    return {
        "nodes": net.sorted_nodes(),
        "arcs": sorted([list(a) for a in net.arcs], key=lambda p: (str(p[0]), str(p[1]))),
        "services": [
            {"id": s.id, "mode": s.mode, "route": list(s.route)} for s in net.services
        ],
        "service_arcs": [
            {
                "service": a.service,
                "from": a.from_node,
                "to": a.to_node,
                "nominal_time": a.nominal_time,
                "max_deviation": a.max_deviation,
                "unit_cost": a.unit_cost,
            }
            for a in net.service_arcs
        ],
        "origin": net.origin,
        "clients": [
            {
                "id": o.client,
                "destination": o.destination,
                "quantity": o.quantity,
                "due_date": o.due_date,
            }
            for o in inst.orders
        ],
        "cost_params": {
            "product_value": costs.product_value,
            "degradation_rate_per_day": costs.degradation_rate_per_day,
            "early_penalty_per_day": costs.early_penalty_per_day,
            "late_penalty_per_day": costs.late_penalty_per_day,
            "shelf_life": costs.shelf_life,
            "transshipment_cost": [
                {"node": node, "from_service": s1, "to_service": s2, "cost": fee}
                for (node, s1, s2), fee in sorted(
                    costs.transshipment_cost.items(), key=lambda kv: (str(kv[0][0]), kv[0][1], kv[0][2])
                )
            ],
        },
        "disruption": {
            "uncertain_arcs": sorted(inst.disruption.uncertain_arcs),
            "deviation_rate": inst.disruption.deviation_rate,
            "budget": inst.disruption.budget,
        },
    }


def instance_from_dict(doc: dict) -> Instance:
    services = tuple(
        Service(id=s["id"], mode=s["mode"], route=tuple(s["route"])) for s in doc["services"]
    )
    service_arcs = tuple(
        ServiceArc(
            index=k,
            service=a["service"],
            from_node=a["from"],
            to_node=a["to"],
            nominal_time=float(a["nominal_time"]),
            max_deviation=float(a["max_deviation"]),
            unit_cost=float(a["unit_cost"]),
        )
        for k, a in enumerate(doc["service_arcs"])
    )
    net = ServiceNetwork(
        nodes=frozenset(doc["nodes"]),
        arcs=frozenset(tuple(a) for a in doc["arcs"]),
        services=services,
        service_arcs=service_arcs,
        origin=doc["origin"],
    )
    orders = tuple(
        ClientOrder(
            client=c["id"],
            destination=c["destination"],
            quantity=float(c["quantity"]),
            due_date=float(c["due_date"]),
        )
        for c in doc["clients"]
    )
    cp = doc["cost_params"]
    costs = CostParams(
        product_value=float(cp["product_value"]),
        degradation_rate_per_day=float(cp["degradation_rate_per_day"]),
        early_penalty_per_day=float(cp["early_penalty_per_day"]),
        late_penalty_per_day=float(cp["late_penalty_per_day"]),
        shelf_life=float(cp["shelf_life"]),
        transshipment_cost={
            (e["node"], e["from_service"], e["to_service"]): float(e["cost"])
            for e in cp["transshipment_cost"]
        },
    )
    dis = doc["disruption"]
    profile = DisruptionProfile(
        uncertain_arcs=frozenset(int(k) for k in dis["uncertain_arcs"]),
        deviation_rate=float(dis["deviation_rate"]),
        budget=float(dis["budget"]),
    )
    return Instance(network=net, orders=orders, costs=costs, disruption=profile)


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2, sort_keys=False) + "\n"


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
