"""Sensitivity-analysis harness.

Runs the full factorial sweep over network size, disruption scale (share of
uncertain service-arcs), disruption degree (deviation rate) and client
count, derives resilience metrics against the undisrupted baselines, ranks
service-arcs by marginal cost impact, and renders the result tables, the
grouped-bar chart and the metric files as static artifacts.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .instancegen import (
    GeneratorConfig,
    apply_disruption,
    config_from_dict,
    config_to_dict,
    generate_base_graph,
    generate_clients,
    generate_cost_params,
    generate_services,
)
from .model import (
    ClientOrder,
    CostParams,
    DisruptionProfile,
    ServiceNetwork,
    nominal_profile,
)
from .pathsolver import InfeasibleInstanceError, PlanningContext, solve_instance

DEFAULT_LEVELS = (0.0, 0.25, 0.50, 0.75, 1.0)
DEFAULT_CLIENT_COUNTS = (1, 3, 5)


@dataclass(frozen=True)
class SweepConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    seeds: tuple[int, ...] = (0,)
    puv_levels: tuple[float, ...] = DEFAULT_LEVELS
    rate_levels: tuple[float, ...] = DEFAULT_LEVELS
    client_counts: tuple[int, ...] = DEFAULT_CLIENT_COUNTS
    gamma_override: float | None = None
    robustness_threshold: float = 1.0
    workers: int = 1

    def __post_init__(self):
        for name in ("seeds", "puv_levels", "rate_levels", "client_counts"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


@dataclass(frozen=True)
class SweepCell:
    seed: int
    network_size: int
    client_count: int
    puv: float
    deviation_rate: float
    total_cost: float | None
    transport: float | None
    transshipment: float | None
    degradation: float | None
    earliness_penalty: float | None
    lateness_penalty: float | None
    solve_time_seconds: float
    status: str  # "optimal" | "infeasible"


@dataclass
class SweepResults:
    config: SweepConfig
    cells: list[SweepCell]

    def cell(self, seed, network_size, client_count, puv, rate) -> SweepCell | None:
        for c in self.cells:
            if (
                c.seed == seed
                and c.network_size == network_size
                and c.client_count == client_count
                and c.puv == puv
                and c.deviation_rate == rate
            ):
                return c
        return None


def _sweep_task(cfg: SweepConfig, seed: int, target_idx: int) -> list[SweepCell]:
    gen = GeneratorConfig(**{**config_to_dict(cfg.generator), "seed": seed})
    base = generate_base_graph(gen)
    networks = generate_services(base, gen.service_arc_targets, gen)
    net = networks[target_idx]
    costs = generate_cost_params(net, gen)
    pool = generate_clients(networks[0], max(cfg.client_counts), seed, gen)
    context = PlanningContext(net, costs)
    size = len(net.service_arcs)
    gamma = cfg.gamma_override if cfg.gamma_override is not None else gen.budget_fraction * size

    cells: list[SweepCell] = []
    for n_clients in cfg.client_counts:
        orders = pool[:n_clients]
        for puv in cfg.puv_levels:
            for rate in cfg.rate_levels:
                profile = apply_disruption(net, puv, rate, seed, budget=gamma)
                started = time.perf_counter()
                try:
                    _, agg = solve_instance(net, orders, profile, costs, context)
                    elapsed = time.perf_counter() - started
                    cells.append(
                        SweepCell(
                            seed=seed,
                            network_size=size,
                            client_count=n_clients,
                            puv=puv,
                            deviation_rate=rate,
                            total_cost=agg.total,
                            transport=agg.transport,
                            transshipment=agg.transshipment,
                            degradation=agg.degradation,
                            earliness_penalty=agg.earliness_penalty,
                            lateness_penalty=agg.lateness_penalty,
                            solve_time_seconds=elapsed,
                            status="optimal",
                        )
                    )
                except InfeasibleInstanceError:
                    elapsed = time.perf_counter() - started
                    cells.append(
                        SweepCell(
                            seed=seed,
                            network_size=size,
                            client_count=n_clients,
                            puv=puv,
                            deviation_rate=rate,
                            total_cost=None,
                            transport=None,
                            transshipment=None,
                            degradation=None,
                            earliness_penalty=None,
                            lateness_penalty=None,
                            solve_time_seconds=elapsed,
                            status="infeasible",
                        )
                    )
    return cells


def run_sweep(cfg: SweepConfig) -> SweepResults:
    """One cell per (seed, network, client count, puv, rate) grid point.

    Cells are solved independently (optionally across processes) and
    sorted into a canonical order; totals are deterministic functions of
    the seed, only the timing fields vary between runs.
    """
    tasks = [
        (seed, t) for seed in cfg.seeds for t in range(len(cfg.generator.service_arc_targets))
    ]
    cells: list[SweepCell] = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = pool.map(
                _sweep_task,
                [cfg] * len(tasks),
                [s for s, _ in tasks],
                [t for _, t in tasks],
            )
            for chunk in chunks:
                cells.extend(chunk)
    else:
        for seed, t in tasks:
            cells.extend(_sweep_task(cfg, seed, t))

    targets = list(cfg.generator.service_arc_targets)
    cells.sort(
        key=lambda c: (
            c.seed,
            targets.index(c.network_size),
            c.client_count,
            c.puv,
            c.deviation_rate,
        )
    )
    return SweepResults(config=cfg, cells=cells)


# ---------------------------------------------------------------------------
# Resilience metrics
# ---------------------------------------------------------------------------


class MissingBaselineError(ValueError):
    pass


def resilience_metrics(results: SweepResults, threshold: float | None = None) -> dict:
    """Per-cell cost changes against the undisrupted baseline, plus each
    stratum's robustness degree.

    The baseline for (seed, network, clients) is the puv=0 cell at the first
    configured deviation rate; relative change is (total - base) / base.
    The robustness degree is the largest deviation rate whose relative
    change at full disruption scale stays below the threshold.
    """
    cfg = results.config
    if threshold is None:
        threshold = cfg.robustness_threshold
    base_rate = cfg.rate_levels[0]

    baselines: dict[tuple, float] = {}
    for seed in cfg.seeds:
        for size_t in cfg.generator.service_arc_targets:
            for n in cfg.client_counts:
                cell = results.cell(seed, size_t, n, 0.0, base_rate)
                if cell is None or cell.total_cost is None:
                    raise MissingBaselineError(
                        f"no puv=0 baseline for seed={seed}, |V|={size_t}, clients={n}"
                    )
                baselines[(seed, size_t, n)] = cell.total_cost

    rows = []
    for c in results.cells:
        base = baselines[(c.seed, c.network_size, c.client_count)]
        if c.total_cost is None:
            rel, absolute = math.inf, math.inf
        else:
            rel = (c.total_cost - base) / base
            absolute = c.total_cost - base
        rows.append(
            {
                "seed": c.seed,
                "network_size": c.network_size,
                "client_count": c.client_count,
                "puv": c.puv,
                "deviation_rate": c.deviation_rate,
                "baseline": base,
                "total_cost": c.total_cost,
                "absolute_change": absolute,
                "relative_change": rel,
            }
        )

    degrees = []
    if 1.0 in results.config.puv_levels:
        for seed in cfg.seeds:
            for size_t in cfg.generator.service_arc_targets:
                for n in cfg.client_counts:
                    ok_rates = [
                        r["deviation_rate"]
                        for r in rows
                        if r["seed"] == seed
                        and r["network_size"] == size_t
                        and r["client_count"] == n
                        and r["puv"] == 1.0
                        and r["relative_change"] < threshold
                    ]
                    degrees.append(
                        {
                            "seed": seed,
                            "network_size": size_t,
                            "client_count": n,
                            "threshold": threshold,
                            "robustness_degree": max(ok_rates) if ok_rates else 0.0,
                        }
                    )
    return {"rows": rows, "robustness_degrees": degrees}


def relative_change(baseline: float, stressed: float) -> float:
    return (stressed - baseline) / baseline


def rank_critical_arcs(
    net: ServiceNetwork,
    orders: list[ClientOrder] | tuple[ClientOrder, ...],
    costs: CostParams,
    rate: float,
    gamma: float,
) -> list[tuple[int, float]]:
    """Marginal cost impact of making each single service-arc uncertain.

    impact(v) = optimal total with uncertain set {v} minus the nominal
    optimal total; infeasibility under the stressed profile ranks as
    infinite impact.  Descending by impact, ties by service-arc index.
    """
    context = PlanningContext(net, costs)
    _, base = solve_instance(net, orders, nominal_profile(budget=gamma), costs, context)
    impacts: list[tuple[int, float]] = []
    for arc in net.service_arcs:
        profile_v = DisruptionProfile(
            uncertain_arcs=frozenset({arc.index}), deviation_rate=rate, budget=gamma
        )
        try:
            _, stressed = solve_instance(net, orders, profile_v, costs, context)
            impacts.append((arc.index, max(stressed.total - base.total, 0.0)))
        except InfeasibleInstanceError:
            impacts.append((arc.index, math.inf))
    impacts.sort(key=lambda kv: (-kv[1], kv[0]))
    return impacts


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def _mean(values: list[float]) -> float | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return sum(vals) / len(vals)


def render_report(results: SweepResults, out_dir: str | Path) -> dict[str, Path]:
    """Write the per-client-count cost tables, the grouped-bar chart and
    the resilience metric files; pure function of the results object."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = results.config
    targets = list(cfg.generator.service_arc_targets)
    table_rates = [r for r in cfg.rate_levels if r != 0.0] or list(cfg.rate_levels)
    written: dict[str, Path] = {}

    def cells_at(size, n, puv, rate) -> list[SweepCell]:
        return [
            c
            for c in results.cells
            if c.network_size == size
            and c.client_count == n
            and c.puv == puv
            and c.deviation_rate == rate
        ]

    instance_no = 0
    for n in cfg.client_counts:
        lines = [
            "In.,V,PUV," + ",".join(f"{int(round(r * 100))}%" for r in table_rates) + ",time_s"
        ]
        if results.cells:
            for size in targets:
                for puv in cfg.puv_levels:
                    instance_no += 1
                    row = [str(instance_no), str(size), f"{int(round(puv * 100))}%"]
                    times: list[float] = []
                    for rate in table_rates:
                        cs = cells_at(size, n, puv, rate)
                        total = _mean([c.total_cost for c in cs])
                        times.extend(c.solve_time_seconds for c in cs)
                        row.append("inf" if total is None else f"{total:.2f}")
                    row.append(f"{_mean(times):.3f}" if times else "")
                    lines.append(",".join(row))
        path = out / f"table_clients_{n}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written[f"table_clients_{n}"] = path

    metrics = None
    try:
        metrics = resilience_metrics(results)
    except MissingBaselineError:
        pass

    metric_lines = [
        "seed,network_size,client_count,puv,deviation_rate,baseline,total_cost,"
        "absolute_change,relative_change"
    ]
    if metrics:
        for r in metrics["rows"]:
            metric_lines.append(
                f"{r['seed']},{r['network_size']},{r['client_count']},{r['puv']:g},"
                f"{r['deviation_rate']:g},{r['baseline']:.2f},"
                + ("inf" if r["total_cost"] is None else f"{r['total_cost']:.2f}")
                + f",{r['absolute_change']:.2f},{r['relative_change']:.6f}"
            )
    path = out / "resilience_metrics.csv"
    path.write_text("\n".join(metric_lines) + "\n", encoding="utf-8")
    written["resilience_metrics"] = path

    degree_lines = ["seed,network_size,client_count,threshold,robustness_degree"]
    if metrics:
        for d in metrics["robustness_degrees"]:
            degree_lines.append(
                f"{d['seed']},{d['network_size']},{d['client_count']},"
                f"{d['threshold']:g},{d['robustness_degree']:g}"
            )
    path = out / "robustness_degree.csv"
    path.write_text("\n".join(degree_lines) + "\n", encoding="utf-8")
    written["robustness_degree"] = path

    path = out / "sensitivity.svg"
    path.write_text(_render_svg(results, table_rates), encoding="utf-8")
    written["figure"] = path
    return written


_PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948")


def _render_svg(results: SweepResults, rates: list[float]) -> str:
    """Grouped bars: one group per (client count, network), bars over puv
    levels, one colored series per deviation rate.  SVG 1.1, deterministic
    bytes for a fixed results object."""
    cfg = results.config
    targets = list(cfg.generator.service_arc_targets)
    groups = [(n, size) for n in cfg.client_counts for size in targets]
    puvs = list(cfg.puv_levels)

    bar_w = 4.0
    cluster_gap = 3.0
    group_gap = 14.0
    cluster_w = len(rates) * bar_w
    group_w = len(puvs) * (cluster_w + cluster_gap) + group_gap
    margin_l, margin_r, margin_t, margin_b = 64.0, 150.0, 20.0, 52.0
    plot_h = 300.0
    width = margin_l + len(groups) * group_w + margin_r
    height = margin_t + plot_h + margin_b

    def mean_total(n, size, puv, rate) -> float | None:
        vals = [
            c.total_cost
            for c in results.cells
            if c.client_count == n
            and c.network_size == size
            and c.puv == puv
            and c.deviation_rate == rate
            and c.total_cost is not None
        ]
        if not vals:
            return None
        return sum(vals) / len(vals)

    peak = 0.0
    for n, size in groups:
        for puv in puvs:
            for rate in rates:
                v = mean_total(n, size, puv, rate)
                if v is not None:
                    peak = max(peak, v)
    if peak <= 0:
        peak = 1.0

    def y(v: float) -> float:
        return margin_t + plot_h - (v / peak) * plot_h

    e: list[str] = []
    e.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">'
    )
    e.append(f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>')
    e.append(
        f'<line x1="{margin_l:.1f}" y1="{margin_t + plot_h:.1f}" '
        f'x2="{width - margin_r:.1f}" y2="{margin_t + plot_h:.1f}" stroke="black"/>'
    )
    e.append(
        f'<line x1="{margin_l:.1f}" y1="{margin_t:.1f}" '
        f'x2="{margin_l:.1f}" y2="{margin_t + plot_h:.1f}" stroke="black"/>'
    )
    for tick in range(5):
        v = peak * tick / 4
        yy = y(v)
        e.append(
            f'<line x1="{margin_l - 4:.1f}" y1="{yy:.2f}" x2="{margin_l:.1f}" y2="{yy:.2f}" stroke="black"/>'
        )
        e.append(
            f'<text x="{margin_l - 7:.1f}" y="{yy + 3:.2f}" font-size="9" '
            f'text-anchor="end" font-family="sans-serif">{v:.0f}</text>'
        )
    for gi, (n, size) in enumerate(groups):
        gx = margin_l + gi * group_w + group_gap / 2
        for pi, puv in enumerate(puvs):
            cx = gx + pi * (cluster_w + cluster_gap)
            for ri, rate in enumerate(rates):
                v = mean_total(n, size, puv, rate)
                if v is None:
                    continue
                x0 = cx + ri * bar_w
                y0 = y(v)
                e.append(
                    f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{bar_w:.2f}" '
                    f'height="{margin_t + plot_h - y0:.2f}" fill="{_PALETTE[ri % len(_PALETTE)]}"/>'
                )
        label = f"{n}cl |V|={size}"
        e.append(
            f'<text x="{gx + (group_w - group_gap) / 2:.2f}" y="{margin_t + plot_h + 14:.1f}" '
            f'font-size="9" text-anchor="middle" font-family="sans-serif">{label}</text>'
        )
    e.append(
        f'<text x="{margin_l + (len(groups) * group_w) / 2:.1f}" y="{height - 10:.1f}" '
        f'font-size="10" text-anchor="middle" font-family="sans-serif">'
        f"bars: disruption scale levels within each group; series: deviation rate</text>"
    )
    lx = width - margin_r + 12
    for ri, rate in enumerate(rates):
        ly = margin_t + 10 + ri * 16
        e.append(
            f'<rect x="{lx:.1f}" y="{ly - 8:.1f}" width="10" height="10" '
            f'fill="{_PALETTE[ri % len(_PALETTE)]}"/>'
        )
        e.append(
            f'<text x="{lx + 14:.1f}" y="{ly + 1:.1f}" font-size="9" '
            f'font-family="sans-serif">rate {int(round(rate * 100))}%</text>'
        )
    e.append("</svg>")
    return "\n".join(e) + "\n"


# ---------------------------------------------------------------------------
# Sweep (de)serialization
# ---------------------------------------------------------------------------


def sweep_config_to_dict(cfg: SweepConfig) -> dict:
    return {
        "generator": config_to_dict(cfg.generator),
        "seeds": list(cfg.seeds),
        "puv_levels": list(cfg.puv_levels),
        "rate_levels": list(cfg.rate_levels),
        "client_counts": list(cfg.client_counts),
        "gamma_override": cfg.gamma_override,
        "robustness_threshold": cfg.robustness_threshold,
        "workers": cfg.workers,
    }


def sweep_config_from_dict(doc: dict) -> SweepConfig:
    return SweepConfig(
        generator=config_from_dict(doc.get("generator", {})),
        seeds=tuple(doc.get("seeds", (0,))),
        puv_levels=tuple(doc.get("puv_levels", DEFAULT_LEVELS)),
        rate_levels=tuple(doc.get("rate_levels", DEFAULT_LEVELS)),
        client_counts=tuple(doc.get("client_counts", DEFAULT_CLIENT_COUNTS)),
        gamma_override=doc.get("gamma_override"),
        robustness_threshold=doc.get("robustness_threshold", 1.0),
        workers=doc.get("workers", 1),
    )


def sweep_to_dict(results: SweepResults) -> dict:
    return {
        "config": sweep_config_to_dict(results.config),
        "cells": [
            {
                "seed": c.seed,
                "network_size": c.network_size,
                "client_count": c.client_count,
                "puv": c.puv,
                "deviation_rate": c.deviation_rate,
                "total_cost": c.total_cost,
                "transport": c.transport,
                "transshipment": c.transshipment,
                "degradation": c.degradation,
                "earliness_penalty": c.earliness_penalty,
                "lateness_penalty": c.lateness_penalty,
                "solve_time_seconds": c.solve_time_seconds,
                "status": c.status,
            }
            for c in results.cells
        ],
    }


def sweep_from_dict(doc: dict) -> SweepResults:
    return SweepResults(
        config=sweep_config_from_dict(doc["config"]),
        cells=[SweepCell(**cell) for cell in doc["cells"]],
    )


def save_sweep(results: SweepResults, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sweep_to_dict(results), indent=1) + "\n", encoding="utf-8")


def load_sweep(path: str | Path) -> SweepResults:
    return sweep_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
