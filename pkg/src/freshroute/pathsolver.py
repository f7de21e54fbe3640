"""Exact robust itinerary optimization, one client at a time.

Nothing couples clients: the objective is a sum of per-client terms and
every constraint involves a single client, so the instance optimum is the
concatenation of per-client optima.  Each client is solved by depth-first
enumeration of node-simple itineraries in the transshipment-expanded graph
with admissible lower-bound pruning; every complete candidate is priced
under its own worst-case deviation scenario and its cost-optimal outbound
day.

A deliberately unoptimized oracle (full enumeration, worst case by LP
vertex enumeration instead of the greedy) is included for verification.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace

from .model import (
    ClientOrder,
    CostParams,
    DisruptionProfile,
    ExpandedGraph,
    ServiceArc,
    ServiceNetwork,
    build_search_graph,
)
from .worstcase import TOLERANCE, WorstCaseResult, worst_case_delay


class InfeasibleItineraryError(ValueError):
    """The itinerary cannot meet the shelf life for any outbound day."""


class InfeasibleClientError(ValueError):
    def __init__(self, client: str, reason: str):
        super().__init__(f"client {client!r}: {reason}")
        self.client = client
        self.reason = reason


class InfeasibleInstanceError(ValueError):
    def __init__(self, failures: list[InfeasibleClientError]):
        self.failures = failures
        names = ", ".join(repr(f.client) for f in failures)
        super().__init__(f"no feasible itinerary for clients: {names}")


@dataclass(frozen=True)
class CostBreakdown:
    transport: float
    transshipment: float
    degradation: float
    earliness_penalty: float
    lateness_penalty: float
    total: float

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(
            transport=self.transport + other.transport,
            transshipment=self.transshipment + other.transshipment,
            degradation=self.degradation + other.degradation,
            earliness_penalty=self.earliness_penalty + other.earliness_penalty,
            lateness_penalty=self.lateness_penalty + other.lateness_penalty,
            total=self.total + other.total,
        )


ZERO_COSTS = CostBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RobustItinerary:
    client: str
    path: tuple[ServiceArc, ...]
    outbound_day: float
    worst_case: WorstCaseResult
    costs: CostBreakdown

    @property
    def arc_indices(self) -> tuple[int, ...]:
        return tuple(a.index for a in self.path)


def _assemble(
    order: ClientOrder,
    costs: CostParams,
    transport_per_unit: float,
    fees_per_unit: float,
    worst_time: float,
    outbound: float,
) -> CostBreakdown:
    q = order.quantity
    arrival = outbound + worst_time
    transport = transport_per_unit * q
    transshipment = fees_per_unit * q
    degradation = costs.degradation_per_unit_day * q * arrival
    earliness = costs.early_penalty_per_day * q * max(order.due_date - arrival, 0.0)
    lateness = costs.late_penalty_per_day * q * max(arrival - order.due_date, 0.0)
    total = transport + transshipment + degradation + earliness + lateness
    return CostBreakdown(transport, transshipment, degradation, earliness, lateness, total)


def evaluate_itinerary(
    order: ClientOrder,
    path: list[ServiceArc] | tuple[ServiceArc, ...],
    outbound: float,
    profile: DisruptionProfile,
    costs: CostParams,
) -> CostBreakdown:
    """Price a fixed itinerary and outbound day under its worst case.

    The worst-case deviation scenario maximizing the arrival time also
    drives degradation and both delivery penalties; arriving after the
    shelf life in that scenario is an error.
    """
    path = tuple(path)
    if not path:
        raise InfeasibleItineraryError("empty itinerary")
    if outbound < 0:
        raise ValueError("outbound day must be >= 0")
    effective = tuple(replace(a, max_deviation=profile.effective_deviation(a)) for a in path)
    transport = 0.0
    fees = 0.0
    prev: ServiceArc | None = None
    for arc in effective:
        if prev is not None:
            if prev.to_node != arc.from_node:
                raise ValueError(
                    f"service-arcs {prev.index} and {arc.index} do not chain head-to-tail"
                )
            fees += costs.transfer_cost(prev.to_node, prev.service, arc.service)
        transport += arc.unit_cost
        prev = arc
    wc = worst_case_delay(effective, profile.budget)
    if outbound + wc.total_time > costs.shelf_life + TOLERANCE:
        raise InfeasibleItineraryError(
            f"worst-case arrival {outbound + wc.total_time:.6f} exceeds "
            f"shelf life {costs.shelf_life}"
        )
    return _assemble(order, costs, transport, fees, wc.total_time, outbound)


def optimal_outbound(worst_time: float, order: ClientOrder, costs: CostParams) -> float:
    """Cost-minimizing outbound day for a fixed worst-case travel time.

    The outbound-dependent cost is convex piecewise linear: waiting trades
    degradation against the earliness penalty until the due date, and only
    adds cost afterwards.  Ties resolve toward shipping earlier.
    """
    if worst_time > costs.shelf_life + TOLERANCE:
        raise InfeasibleItineraryError(
            f"worst-case travel time {worst_time:.6f} exceeds shelf life {costs.shelf_life}"
        )
    if costs.degradation_per_unit_day < costs.early_penalty_per_day:
        return min(max(order.due_date - worst_time, 0.0), costs.shelf_life - worst_time)
    return 0.0


# ---------------------------------------------------------------------------
# Exact per-client search
# ---------------------------------------------------------------------------


class PlanningContext:
    """Reusable per-network search state: the expanded graph, a reverse
    adjacency, and per-destination admissible cost-to-go and
    nominal-time-to-go bounds (profile-independent, so one context serves
    a whole sensitivity sweep)."""

    def __init__(self, net: ServiceNetwork, costs: CostParams):
        self.net = net
        self.costs = costs
        self.graph = build_search_graph(net, costs)
        n = len(net.service_arcs)
        self.reverse: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for k, nxts in self.graph.successors.items():
            for b, fee in nxts:
                self.reverse[b].append((k, fee))
        self._togo: dict[object, tuple[list[float], list[float]]] = {}

    def togo(self, destination) -> tuple[list[float], list[float]]:
        try:
            return self._togo[destination]
        except KeyError:
            arcs = self.net.service_arcs
            cost = _reverse_dijkstra(
                self.reverse, arcs, destination, lambda k, fee: fee + arcs[k].unit_cost
            )
            time = _reverse_dijkstra(
                self.reverse, arcs, destination, lambda k, fee: arcs[k].nominal_time
            )
            self._togo[destination] = (cost, time)
            return self._togo[destination]


def _reverse_dijkstra(rev, arcs, destination, edge_weight) -> list[float]:
    """Cheapest completion to the destination from every state, relaxing
    node-simplicity (a valid lower bound for pruning)."""
    n = len(arcs)
    dist = [float("inf")] * n
    heap: list[tuple[float, int]] = []
    for k, arc in enumerate(arcs):
        if arc.to_node == destination:
            dist[k] = 0.0
            heap.append((0.0, k))
    heapq.heapify(heap)
    while heap:
        d, k = heapq.heappop(heap)
        if d > dist[k]:
            continue
        for p, fee in rev[k]:
            nd = d + edge_weight(k, fee)
            if nd < dist[p]:
                dist[p] = nd
                heapq.heappush(heap, (nd, p))
    return dist


def _greedy_delay(indices: list[int], t_hat: list[float], budget: float) -> float:
    remaining = budget
    delay = 0.0
    for k in sorted(indices, key=lambda k: (-t_hat[k], k)):
        if remaining <= 0.0 or t_hat[k] <= 0.0:
            break
        share = min(1.0, remaining)
        delay += share * t_hat[k]
        remaining -= share
    return delay


def solve_client(
    net: ServiceNetwork,
    order: ClientOrder,
    profile: DisruptionProfile,
    costs: CostParams,
    context: PlanningContext | None = None,
) -> RobustItinerary:
    """Globally optimal robust itinerary for one client.

    Depth-first search over node-simple itineraries in lexicographic order
    of service-arc index sequences; branches are pruned when the nominal
    time plus the fastest completion breaks the shelf life, or when the
    committed cost plus admissible completion bounds cannot beat the
    incumbent.  The lexicographically smallest sequence wins among
    equal-cost optima.
    """
    if context is None:
        context = PlanningContext(net, costs)
    graph = context.graph
    arcs = net.service_arcs
    dest = order.destination
    if dest == net.origin:
        raise InfeasibleClientError(order.client, "destination equals origin")
    cost_togo, nominal_togo = context.togo(dest)

    t_nom = [a.nominal_time for a in arcs]
    t_hat = [profile.effective_deviation(a) for a in arcs]
    unit = [a.unit_cost for a in arcs]
    q = order.quantity
    psi = costs.degradation_per_unit_day
    early = costs.early_penalty_per_day
    late = costs.late_penalty_per_day
    due = order.due_date
    shelf = costs.shelf_life
    budget = profile.budget

    # With the budget covering any simple path every selected arc is fully
    # delayed, so the time-to-go table can price future delays too.
    full_budget = budget >= len(net.nodes) - 1
    if full_budget and any(t_hat):
        time_togo = _reverse_dijkstra(
            context.reverse, arcs, dest, lambda k, fee: t_nom[k] + t_hat[k]
        )
    else:
        time_togo = nominal_togo

    def completion_floor(worst_lb: float) -> float:
        # cheapest degradation + penalties over arrivals in [worst_lb, shelf]
        a = min(max(worst_lb, due), shelf) if psi < early else worst_lb
        floor = psi * q * a
        if a < due:
            floor += early * q * (due - a)
        elif a > due:
            floor += late * q * (a - due)
        return floor

    best_total = float("inf")
    best: tuple[tuple[int, ...], float] | None = None
    path: list[int] = []

    def partial_delay(hat_sum: float, n_pos: int) -> float:
        if n_pos <= budget:
            return hat_sum
        return _greedy_delay(path, t_hat, budget)

    def consider_candidate(transport: float, fees: float, nominal: float, hat_sum: float, n_pos: int) -> None:
        nonlocal best_total, best
        worst_time = nominal + partial_delay(hat_sum, n_pos)
        if worst_time > shelf + TOLERANCE:
            return
        outbound = optimal_outbound(worst_time, order, costs)
        bd = _assemble(order, costs, transport, fees, worst_time, outbound)
        if bd.total < best_total - TOLERANCE:
            best_total = bd.total
            best = (tuple(path), outbound)

    def visit(k, visited, transport, fees, nominal, hat_sum, n_pos) -> None:
        path.append(k)
        if arcs[k].to_node == dest:
            consider_candidate(transport, fees, nominal, hat_sum, n_pos)
        else:
            visited.add(arcs[k].to_node)
            for b, fee in graph.successors[k]:
                head = arcs[b].to_node
                if head in visited:
                    continue
                nnominal = nominal + t_nom[b]
                nhat = hat_sum + t_hat[b]
                npos = n_pos + (1 if t_hat[b] > 0.0 else 0)
                path.append(b)
                delay_lb = partial_delay(nhat, npos)
                path.pop()
                worst_lb = nnominal + delay_lb + time_togo[b]
                if worst_lb > shelf + TOLERANCE:
                    continue
                ntransport = transport + unit[b]
                nfees = fees + fee
                bound = q * (ntransport + nfees + cost_togo[b]) + completion_floor(worst_lb)
                if bound >= best_total - TOLERANCE:
                    continue
                visit(b, visited, ntransport, nfees, nnominal, nhat, npos)
            visited.discard(arcs[k].to_node)
        path.pop()

    visited = {net.origin}
    for k in graph.origin_arcs:
        hat0 = t_hat[k]
        pos0 = 1 if hat0 > 0.0 else 0
        delay0 = min(1.0, budget) * hat0
        worst_lb = t_nom[k] + delay0 + time_togo[k]
        if worst_lb > shelf + TOLERANCE:
            continue
        bound = q * (unit[k] + cost_togo[k]) + completion_floor(worst_lb)
        if bound >= best_total - TOLERANCE:
            continue
        visit(k, visited, unit[k], 0.0, t_nom[k], hat0, pos0)

    if best is None:
        raise InfeasibleClientError(
            order.client, "no itinerary reaches the destination within the shelf life"
        )

    indices, outbound = best
    effective = tuple(
        replace(arcs[k], max_deviation=profile.effective_deviation(arcs[k])) for k in indices
    )
    wc = worst_case_delay(effective, budget)
    breakdown = evaluate_itinerary(order, [arcs[k] for k in indices], outbound, profile, costs)
    return RobustItinerary(
        client=order.client,
        path=effective,
        outbound_day=outbound,
        worst_case=wc,
        costs=breakdown,
    )


def solve_instance(
    net: ServiceNetwork,
    orders: list[ClientOrder] | tuple[ClientOrder, ...],
    profile: DisruptionProfile,
    costs: CostParams,
    context: PlanningContext | None = None,
) -> tuple[list[RobustItinerary], CostBreakdown]:
    """Solve every client independently; aggregate is the plain sum."""
    if context is None:
        context = PlanningContext(net, costs)
    itineraries: list[RobustItinerary] = []
    failures: list[InfeasibleClientError] = []
    for order in orders:
        try:
            itineraries.append(solve_client(net, order, profile, costs, context))
        except InfeasibleClientError as err:
            failures.append(err)
    if failures:
        raise InfeasibleInstanceError(failures)
    aggregate = ZERO_COSTS
    for it in itineraries:
        aggregate = aggregate + it.costs
    return itineraries, aggregate


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

ORACLE_NODE_LIMIT = 10


def _vertex_enumeration_delay(devs: list[float], budget: float) -> tuple[float, list[float]]:
    """Exact max of ``sum(u * dev)`` over the budgeted box by enumerating
    LP vertices: each vertex sets u to 1 on a subset and spends any leftover
    budget fractionally on at most one further coordinate."""
    n = len(devs)
    best = 0.0
    best_u = [0.0] * n
    for mask in range(1 << n):
        chosen = [i for i in range(n) if mask >> i & 1]
        if len(chosen) > budget:
            continue
        value = sum(devs[i] for i in chosen)
        u = [0.0] * n
        for i in chosen:
            u[i] = 1.0
        leftover = budget - len(chosen)
        if leftover > 0:
            rest = [i for i in range(n) if not mask >> i & 1]
            if rest:
                j = max(rest, key=lambda i: devs[i])
                u[j] = min(1.0, leftover)
                value += u[j] * devs[j]
        if value > best + TOLERANCE:
            best = value
            best_u = u
    return best, best_u


def brute_force_oracle(
    net: ServiceNetwork,
    order: ClientOrder,
    profile: DisruptionProfile,
    costs: CostParams,
) -> RobustItinerary:
    """Reference solver: exhaustive, unpruned enumeration of all simple
    itineraries, worst case per itinerary by LP vertex enumeration.

    Guarded to small networks; shares the solver's tie-breaking (first
    strictly better candidate in lexicographic sequence order wins).
    """
    if len(net.nodes) > ORACLE_NODE_LIMIT:
        raise ValueError(f"oracle limited to networks with <= {ORACLE_NODE_LIMIT} nodes")
    graph = build_search_graph(net, costs)
    arcs = net.service_arcs
    best_total = float("inf")
    best: tuple[tuple[int, ...], float, WorstCaseResult] | None = None

    for indices in graph.simple_paths(order.destination):
        nominal = sum(arcs[k].nominal_time for k in indices)
        devs = [profile.effective_deviation(arcs[k]) for k in indices]
        delay, u = _vertex_enumeration_delay(devs, profile.budget)
        worst_time = nominal + delay
        if worst_time > costs.shelf_life + TOLERANCE:
            continue
        outbound = optimal_outbound(worst_time, order, costs)
        transport = sum(arcs[k].unit_cost for k in indices)
        fees = graph.path_transfer_cost(indices)
        bd = _assemble(order, costs, transport, fees, worst_time, outbound)
        if bd.total < best_total - TOLERANCE:
            best_total = bd.total
            wc = WorstCaseResult(
                total_time=worst_time,
                delay=delay,
                u_assignment={k: u[i] for i, k in enumerate(indices)},
            )
            best = (indices, outbound, wc)

    if best is None:
        raise InfeasibleClientError(
            order.client, "no itinerary reaches the destination within the shelf life"
        )
    indices, outbound, wc = best
    effective = tuple(
        replace(arcs[k], max_deviation=profile.effective_deviation(arcs[k])) for k in indices
    )
    breakdown = evaluate_itinerary(order, [arcs[k] for k in indices], outbound, profile, costs)
    return RobustItinerary(
        client=order.client,
        path=effective,
        outbound_day=outbound,
        worst_case=wc,
        costs=breakdown,
    )


# ---------------------------------------------------------------------------
# Solution JSON
# ---------------------------------------------------------------------------


def solution_to_dict(itineraries: list[RobustItinerary], aggregate: CostBreakdown) -> dict:
    def costs_dict(c: CostBreakdown) -> dict:
        return {
            "transport": c.transport,
            "transshipment": c.transshipment,
            "degradation": c.degradation,
            "earliness_penalty": c.earliness_penalty,
            "lateness_penalty": c.lateness_penalty,
            "total": c.total,
        }

    return {
        "status": "optimal",
        "itineraries": [
            {
                "client": it.client,
                "path": list(it.arc_indices),
                "outbound_day": it.outbound_day,
                "u_assignment": {str(k): u for k, u in sorted(it.worst_case.u_assignment.items())},
                "worst_case": {
                    "total_time": it.worst_case.total_time,
                    "delay": it.worst_case.delay,
                },
                "costs": costs_dict(it.costs),
            }
            for it in itineraries
        ],
        "aggregate": costs_dict(aggregate),
    }
