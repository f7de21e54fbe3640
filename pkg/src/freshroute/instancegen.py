"""Seeded generation of benchmark instances.

Produces nested service networks sharing one base city graph (each network
adds services, never arcs), a shared client pool, and disruption profiles
whose uncertain sets are nested across disruption scales.  Every draw comes
from a PCG64 generator seeded through a SeedSequence derived from the
configured seed plus a per-entity label, so adding clients or networks
never perturbs earlier entities and outputs are identical across platforms.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .model import (
    ClientOrder,
    CostParams,
    DisruptionProfile,
    Instance,
    Service,
    ServiceArc,
    ServiceNetwork,
    materialize_deviations,
    nominal_shortest_times,
)

MODE_SPEEDS_KMH = {"air": (800.0, 1000.0), "rail": (50.0, 70.0), "water": (46.3, 50.0)}
MODE_COST_PER_KM = {"air": (1.0, 2.0), "rail": (0.15, 0.30), "water": (0.05, 0.20)}


class ConfigError(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_nodes: int = 27
    n_arcs: int = 48
    service_arc_targets: tuple[int, ...] = (50, 100, 150)
    n_clients: int = 5
    mode_mix: dict = field(default_factory=lambda: {"air": 1 / 3, "rail": 1 / 3, "water": 1 / 3})
    distance_range_km: tuple[float, float] = (300.0, 12500.0)
    speed_ranges_kmh: dict = field(default_factory=lambda: dict(MODE_SPEEDS_KMH))
    cost_per_km_ranges: dict = field(default_factory=lambda: dict(MODE_COST_PER_KM))
    transfer_same_mode: tuple[float, float] = (10.0, 15.0)
    transfer_cross_mode: tuple[float, float] = (15.0, 25.0)
    product_value: float = 100.0
    degradation_rate_per_day: float = 0.10
    early_penalty_fraction: float = 0.15
    late_penalty_fraction: float = 0.20
    shelf_life: float = 30.0
    quantity_range: tuple[int, int] = (5, 10)
    due_date_window: tuple[float, float] = (0.8, 1.2)
    #: per-unit transport cost = (cost-per-km draw) * distance / this divisor;
    #: calibrated so instance totals land in the 1e4-1e5 range
    cost_scale_divisor: float = 100.0
    budget_fraction: float = 0.5
    max_route_arcs: int = 5
    client_retry_cap: int = 100

    def __post_init__(self):
        object.__setattr__(self, "service_arc_targets", tuple(self.service_arc_targets))

    def validate(self) -> None:
        if self.n_nodes < 2:
            raise ConfigError("need at least 2 nodes")
        if self.n_arcs < self.n_nodes - 1:
            raise ConfigError("n_arcs must be at least n_nodes - 1 for connectivity")
        if self.n_arcs > self.n_nodes * (self.n_nodes - 1):
            raise ConfigError("n_arcs exceeds the number of distinct directed arcs")
        if not self.service_arc_targets:
            raise ConfigError("service_arc_targets must be non-empty")
        if list(self.service_arc_targets) != sorted(set(self.service_arc_targets)):
            raise ConfigError("service_arc_targets must be strictly increasing")
        if self.service_arc_targets[0] < self.n_arcs:
            raise ConfigError(
                "smallest target below arc count: cannot cover every arc with one service"
            )
        if not 0 < self.n_clients <= self.n_nodes - 1:
            raise ConfigError("n_clients must be in [1, n_nodes - 1]")
        if abs(sum(self.mode_mix.values()) - 1.0) > 1e-9:
            raise ConfigError("mode_mix fractions must sum to 1")
        for lo, hi in (
            self.distance_range_km,
            self.transfer_same_mode,
            self.transfer_cross_mode,
            self.due_date_window,
        ):
            if not lo <= hi:
                raise ConfigError("empty parameter range")


def substream(seed: int, *labels) -> np.random.Generator:
    """Independent RNG substream for one entity.

    PCG64 seeded from a SeedSequence over the base seed plus a BLAKE2 digest
    of the labels; stable across runs and platforms.
    """
    digest = hashlib.blake2b(repr(labels).encode("utf-8"), digest_size=16).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *words])))


@dataclass(frozen=True)
class BaseGraph:
    nodes: tuple[int, ...]
    arcs: tuple[tuple[int, int], ...]
    distance_km: dict

    def dist(self, i: int, j: int) -> float:
        return self.distance_km[(min(i, j), max(i, j))]


def generate_base_graph(cfg: GeneratorConfig) -> BaseGraph:
    """Connected directed base graph with symmetric node-pair distances."""
    cfg.validate()
    rng = substream(cfg.seed, "base-graph")
    n = cfg.n_nodes
    arcs: list[tuple[int, int]] = []
    arc_set: set[tuple[int, int]] = set()
    # out-tree from the origin guarantees reachability of every node
    for v in range(1, n):
        parent = int(rng.integers(0, v))
        arcs.append((parent, v))
        arc_set.add((parent, v))
    while len(arcs) < cfg.n_arcs:
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        if i == j or (i, j) in arc_set:
            continue
        arcs.append((i, j))
        arc_set.add((i, j))
    lo, hi = cfg.distance_range_km
    distance: dict = {}
    for i, j in arcs:
        key = (min(i, j), max(i, j))
        if key not in distance:
            distance[key] = float(substream(cfg.seed, "distance", key).uniform(lo, hi))
    return BaseGraph(nodes=tuple(range(n)), arcs=tuple(arcs), distance_km=distance)


def _draw_mode(cfg: GeneratorConfig, rng: np.random.Generator) -> str:
    r = float(rng.uniform())
    acc = 0.0
    for mode in ("air", "rail", "water"):
        acc += cfg.mode_mix.get(mode, 0.0)
        if r <= acc + 1e-12:
            return mode
    return "water"


def _chain_route(
    rng: np.random.Generator,
    pool: set[tuple[int, int]],
    out_map: dict[int, list[int]],
) -> list[int]:
    """Pick a seed arc from the pool and extend it forward through pool arcs
    into a node-simple route, consuming what it uses."""
    seed_arc = tuple(sorted(pool)[int(rng.integers(0, len(pool)))])
    route = [seed_arc[0], seed_arc[1]]
    pool.discard(seed_arc)
    while True:
        head = route[-1]
        options = sorted(j for j in out_map.get(head, ()) if (head, j) in pool and j not in route)
        if not options:
            return route
        nxt = options[int(rng.integers(0, len(options)))]
        route.append(nxt)
        pool.discard((head, nxt))


def _random_walk_route(
    rng: np.random.Generator,
    base: BaseGraph,
    out_map: dict[int, list[int]],
    max_arcs: int,
) -> list[int]:
    starts = sorted({i for i, _ in base.arcs})
    start = starts[int(rng.integers(0, len(starts)))]
    route = [start]
    for _ in range(max_arcs):
        options = sorted(j for j in out_map.get(route[-1], ()) if j not in route)
        if not options:
            break
        route.append(options[int(rng.integers(0, len(options)))])
    return route


def generate_services(base: BaseGraph, targets, cfg: GeneratorConfig) -> list[ServiceNetwork]:
    """Nested service networks hitting each service-arc target exactly.

    The smallest network covers every base arc with at least one service;
    larger networks append further services over the same arcs.  A service's
    speed and cost rate are drawn once from its mode's range and shared by
    all its arcs, so nested networks carry identical parameters on shared
    service-arcs.
    """
    targets = list(targets)
    if list(targets) != sorted(set(targets)):
        raise ConfigError("targets must be strictly increasing")
    if targets[0] < len(base.arcs):
        raise ConfigError(
            f"target {targets[0]} below arc count {len(base.arcs)}: "
            "cannot cover every arc with at least one service"
        )
    out_map: dict[int, list[int]] = {}
    for i, j in base.arcs:
        out_map.setdefault(i, []).append(j)

    rng = substream(cfg.seed, "services")
    services: list[Service] = []
    count = 0

    def add_service(route: list[int]) -> None:
        nonlocal count
        sid = f"s{len(services):02d}"
        mode = _draw_mode(cfg, substream(cfg.seed, "service-mode", sid))
        services.append(Service(id=sid, mode=mode, route=tuple(route)))
        count += len(route) - 1

    pool = set(base.arcs)
    while pool:
        add_service(_chain_route(rng, pool, out_map))
    if count > targets[0]:
        raise ConfigError(
            f"covering the base arcs already needs {count} service-arcs, above target {targets[0]}"
        )

    networks: list[ServiceNetwork] = []
    for target in targets:
        while count < target:
            route = _random_walk_route(rng, base, out_map, min(cfg.max_route_arcs, target - count))
            if len(route) < 2:
                continue
            add_service(route)
        if count != target:
            raise ConfigError(f"cannot hit service-arc target {target} exactly")
        networks.append(_build_network(base, list(services), cfg))
    return networks


def _build_network(base: BaseGraph, services: list[Service], cfg: GeneratorConfig) -> ServiceNetwork:
    service_arcs: list[ServiceArc] = []
    for s in services:
        params = substream(cfg.seed, "service-params", s.id)
        lo_v, hi_v = cfg.speed_ranges_kmh[s.mode]
        speed = float(params.uniform(lo_v, hi_v))
        lo_c, hi_c = cfg.cost_per_km_ranges[s.mode]
        rate = float(params.uniform(lo_c, hi_c))
        for i, j in s.route_arcs():
            d = base.dist(i, j)
            service_arcs.append(
                ServiceArc(
                    index=len(service_arcs),
                    service=s.id,
                    from_node=i,
                    to_node=j,
                    nominal_time=d / speed / 24.0,
                    max_deviation=0.0,
                    unit_cost=rate * d / cfg.cost_scale_divisor,
                )
            )
    return ServiceNetwork(
        nodes=frozenset(base.nodes),
        arcs=frozenset(base.arcs),
        services=tuple(services),
        service_arcs=tuple(service_arcs),
        origin=0,
    )


def generate_cost_params(net: ServiceNetwork, cfg: GeneratorConfig) -> CostParams:
    """Cost parameters with transshipment fees for every structurally
    possible transfer; fee draws are keyed by (node, s1, s2) so nested
    networks agree on shared entries."""
    mode = {s.id: s.mode for s in net.services}
    incoming: dict = {}
    outgoing: dict = {}
    for a in net.service_arcs:
        incoming.setdefault(a.to_node, set()).add(a.service)
        outgoing.setdefault(a.from_node, set()).add(a.service)
    fees: dict = {}
    for node in sorted(incoming):
        for s1 in sorted(incoming[node]):
            for s2 in sorted(outgoing.get(node, ())):
                if s1 == s2:
                    continue
                lo, hi = (
                    cfg.transfer_same_mode if mode[s1] == mode[s2] else cfg.transfer_cross_mode
                )
                fees[(node, s1, s2)] = float(
                    substream(cfg.seed, "transfer", node, s1, s2).uniform(lo, hi)
                )
    return CostParams(
        product_value=cfg.product_value,
        degradation_rate_per_day=cfg.degradation_rate_per_day,
        early_penalty_per_day=cfg.early_penalty_fraction * cfg.product_value,
        late_penalty_per_day=cfg.late_penalty_fraction * cfg.product_value,
        shelf_life=cfg.shelf_life,
        transshipment_cost=fees,
    )


def generate_clients(
    net: ServiceNetwork, n: int, seed: int, cfg: GeneratorConfig | None = None
) -> list[ClientOrder]:
    """Sequential client pool: the first n clients are identical for every
    n, so smaller experiments are prefixes of larger ones."""
    cfg = cfg or GeneratorConfig(seed=seed)
    if n > len(net.nodes) - 1:
        raise ConfigError("more clients than non-origin nodes")
    times = nominal_shortest_times(net)
    candidates = [x for x in sorted(net.nodes) if x != net.origin]
    used: set = set()
    orders: list[ClientOrder] = []
    for slot in range(n):
        rng = substream(seed, "client", slot)
        dest = None
        for _ in range(cfg.client_retry_cap):
            pick = candidates[int(rng.integers(0, len(candidates)))]
            if pick in used:
                continue
            if times.get(pick, float("inf")) > cfg.shelf_life + 1e-9:
                continue
            dest = pick
            break
        if dest is None:
            raise GenerationError(
                f"client slot {slot}: no reachable unused destination after "
                f"{cfg.client_retry_cap} tries"
            )
        used.add(dest)
        lo_q, hi_q = cfg.quantity_range
        quantity = int(rng.integers(lo_q, hi_q + 1))
        lo_w, hi_w = cfg.due_date_window
        due = float(rng.uniform(lo_w, hi_w)) * times[dest]
        due = min(max(due, 1.0), cfg.shelf_life)
        orders.append(
            ClientOrder(client=f"c{slot + 1}", destination=dest, quantity=quantity, due_date=due)
        )
    return orders


def apply_disruption(
    net: ServiceNetwork,
    puv: float,
    rate: float,
    seed: int,
    budget: float | None = None,
) -> DisruptionProfile:
    """Disruption profile with an uncertain set of ceil(puv * |V|) arcs.

    For a fixed seed the sets are nested across puv levels (one random
    permutation per network size, prefixes taken), which is what lets
    growing disruption scales be read as adding critical arcs.
    """
    if not 0.0 <= puv <= 1.0:
        raise ConfigError("puv must be within [0, 1]")
    if rate < 0.0:
        raise ConfigError("deviation rate must be >= 0")
    n = len(net.service_arcs)
    m = math.ceil(puv * n - 1e-9)
    perm = substream(seed, "disruption", n).permutation(n)
    uncertain = frozenset(int(k) for k in perm[:m])
    if budget is None:
        budget = 0.5 * n
    return DisruptionProfile(uncertain_arcs=uncertain, deviation_rate=rate, budget=budget)


def generate_instances(
    cfg: GeneratorConfig, puv: float = 0.0, rate: float = 0.0
) -> list[Instance]:
    """End-to-end generation of one nested instance family.

    Clients are drawn against the smallest network, so every nested network
    shares the same feasible client pool.
    """
    cfg.validate()
    base = generate_base_graph(cfg)
    networks = generate_services(base, cfg.service_arc_targets, cfg)
    orders = tuple(generate_clients(networks[0], cfg.n_clients, cfg.seed, cfg))
    instances = []
    for net in networks:
        profile = apply_disruption(
            net, puv, rate, cfg.seed, budget=cfg.budget_fraction * len(net.service_arcs)
        )
        instances.append(
            Instance(
                network=materialize_deviations(net, profile),
                orders=orders,
                costs=generate_cost_params(net, cfg),
                disruption=profile,
            )
        )
    return instances


# --- config (de)serialization for the CLI --------------------------------


def config_to_dict(cfg: GeneratorConfig) -> dict:
    doc = asdict(cfg)
    doc["service_arc_targets"] = list(cfg.service_arc_targets)
    return doc


def config_from_dict(doc: dict) -> GeneratorConfig:
    known = {f for f in GeneratorConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(doc)
    for key in (
        "service_arc_targets",
        "distance_range_km",
        "transfer_same_mode",
        "transfer_cross_mode",
        "quantity_range",
        "due_date_window",
    ):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    for key in ("speed_ranges_kmh", "cost_per_km_ranges"):
        if key in kwargs:
            kwargs[key] = {m: tuple(v) for m, v in kwargs[key].items()}
    return GeneratorConfig(**kwargs)
