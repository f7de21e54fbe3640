"""Command-line interface.

Exit codes are part of the interface: 0 success, 2 usage/config/IO errors,
3 infeasible instances, 4 verification failures.  All randomness flows
through explicit seeds; repeated invocations write identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import experiments, instancegen, milp, pathsolver
from .model import Instance, load_instance, save_instance, validate_instance

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4

OUT_DIR_ENV = "FRESHROUTE_OUT"


def _default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, ".")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from err
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freshroute",
        description="Robust multi-modal itinerary planning for perishable goods "
        "under budgeted travel-time uncertainty.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate nested benchmark instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=None, help="number of city nodes")
    p.add_argument("--arcs", type=int, default=None, help="number of directed base arcs")
    p.add_argument("--targets", type=_int_list, default=None, help="service-arc counts, e.g. 50,100,150")
    p.add_argument("--clients", type=int, default=None, help="number of clients")
    p.add_argument("--puv", type=float, default=0.0, help="share of uncertain service-arcs")
    p.add_argument("--rate", type=float, default=0.0, help="deviation rate")
    p.add_argument("--gamma", type=float, default=None, help="override the uncertainty budget")
    p.add_argument("--config", type=Path, default=None, help="generator config JSON with overrides")
    p.add_argument("--out-dir", type=Path, default=None)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("instance", type=Path)
    p.add_argument("--gamma", type=float, default=None, help="override the instance budget")
    p.add_argument("--out", type=Path, default=None, help="solution JSON path")

    p = sub.add_parser("emit-milp", help="write the linearized robust MILP in LP format")
    p.add_argument("instance", type=Path)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--out", type=Path, default=None, help="LP file path")

    p = sub.add_parser("verify", help="verify a solution against an instance")
    p.add_argument("instance", type=Path)
    p.add_argument(
        "solution",
        type=Path,
        help="solution JSON from 'solve', or 'name value' text from an external solver",
    )
    p.add_argument("--gamma", type=float, default=None)

    p = sub.add_parser("sweep", help="run the sensitivity sweep")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds (0..N-1)")
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--arcs", type=int, default=None)
    p.add_argument("--targets", type=_int_list, default=None)
    p.add_argument("--clients", type=_int_list, default=None, help="client counts, e.g. 1,3,5")
    p.add_argument("--puv-levels", type=_float_list, default=None)
    p.add_argument("--rate-levels", type=_float_list, default=None)
    p.add_argument("--gamma", type=float, default=None, help="override gamma for every cell")
    p.add_argument("--threshold", type=float, default=1.0, help="robustness-degree threshold")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None, help="sweep results JSON path")

    p = sub.add_parser("report", help="render tables, chart and metrics from sweep results")
    p.add_argument("sweep", type=Path)
    p.add_argument("--out-dir", type=Path, default=None)

    return parser


def _generator_config(args, **overrides) -> instancegen.GeneratorConfig:
    doc = {}
    if getattr(args, "config", None):
        doc.update(json.loads(args.config.read_text(encoding="utf-8")))
    doc["seed"] = args.seed if hasattr(args, "seed") else doc.get("seed", 0)
    if getattr(args, "nodes", None) is not None:
        doc["n_nodes"] = args.nodes
    if getattr(args, "arcs", None) is not None:
        doc["n_arcs"] = args.arcs
    if getattr(args, "targets", None) is not None:
        doc["service_arc_targets"] = args.targets
    if getattr(args, "clients", None) is not None and isinstance(args.clients, int):
        doc["n_clients"] = args.clients
    doc.update(overrides)
    return instancegen.config_from_dict(doc)


def _load_instance_checked(path: Path, gamma: float | None) -> Instance:
    inst = load_instance(path)
    if gamma is not None:
        from dataclasses import replace

        inst = replace(inst, disruption=replace(inst.disruption, budget=gamma))
    report = validate_instance(inst)
    if not report.ok:
        raise instancegen.ConfigError(f"invalid instance {path}:\n{report}")
    return inst


def cmd_generate(args) -> int:
    cfg = _generator_config(args)
    instances = instancegen.generate_instances(cfg, puv=args.puv, rate=args.rate)
    out_dir = args.out_dir or Path(_default_out_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    for inst in instances:
        if args.gamma is not None:
            from dataclasses import replace

            inst = replace(inst, disruption=replace(inst.disruption, budget=args.gamma))
        n_arcs = len(inst.network.service_arcs)
        path = out_dir / f"instance_v{n_arcs}_seed{cfg.seed}.json"
        save_instance(inst, path)
        print(
            f"{path}: {len(inst.network.nodes)} nodes, {len(inst.network.arcs)} arcs, "
            f"{len(inst.network.services)} services, {n_arcs} service-arcs, "
            f"{len(inst.orders)} clients, gamma={inst.disruption.budget:g}"
        )
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance_checked(args.instance, args.gamma)
    itineraries, aggregate = pathsolver.solve_instance(
        inst.network, inst.orders, inst.disruption, inst.costs
    )
    doc = pathsolver.solution_to_dict(itineraries, aggregate)
    out = args.out or (Path(_default_out_dir()) / (args.instance.stem + ".solution.json"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    for it in itineraries:
        print(
            f"{it.client}: path {list(it.arc_indices)} depart day {it.outbound_day:.3f} "
            f"worst arrival {it.outbound_day + it.worst_case.total_time:.3f} "
            f"cost {it.costs.total:.2f}"
        )
    print(
        f"total {aggregate.total:.2f} (transport {aggregate.transport:.2f}, "
        f"transshipment {aggregate.transshipment:.2f}, degradation {aggregate.degradation:.2f}, "
        f"early {aggregate.earliness_penalty:.2f}, late {aggregate.lateness_penalty:.2f})"
    )
    print(f"solution written to {out}")
    return EXIT_OK


def cmd_emit_milp(args) -> int:
    inst = _load_instance_checked(args.instance, args.gamma)
    model = milp.build_model(inst.network, inst.orders, inst.disruption, inst.costs)
    text = milp.emit_lp(model)
    out = args.out or (Path(_default_out_dir()) / (args.instance.stem + ".lp"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(
        f"{out}: {len(model.variables)} variables, {len(model.constraints)} constraints"
    )
    return EXIT_OK


def _assignments_from_solution_json(doc: dict, orders) -> tuple[list, float]:
    by_id = {o.client: o for o in orders}
    assignments = []
    for entry in doc["itineraries"]:
        order = by_id.get(entry["client"])
        arrival = entry["outbound_day"] + entry["worst_case"]["total_time"]
        due = order.due_date if order else 0.0
        assignments.append(
            milp.ClientAssignment(
                client=entry["client"],
                path=tuple(entry["path"]),
                outbound=entry["outbound_day"],
                u={int(k): v for k, v in entry["u_assignment"].items() if v != 0.0},
                earliness=max(due - arrival, 0.0),
                lateness=max(arrival - due, 0.0),
            )
        )
    return assignments, doc["aggregate"]["total"]


def cmd_verify(args) -> int:
    inst = _load_instance_checked(args.instance, args.gamma)
    text = args.solution.read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        assignments, claimed = _assignments_from_solution_json(json.loads(text), inst.orders)
        report = milp.verify_solution(
            inst.network, inst.orders, inst.disruption, inst.costs, assignments, claimed
        )
    else:
        model = milp.build_model(inst.network, inst.orders, inst.disruption, inst.costs)
        parsed = milp.parse_solution(model, text)
        for warning in parsed.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        report = milp.verify_solution(
            inst.network, inst.orders, inst.disruption, inst.costs, parsed
        )
    print(report)
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_sweep(args) -> int:
    gen = _generator_config(args)
    kwargs = {}
    if args.puv_levels is not None:
        kwargs["puv_levels"] = tuple(args.puv_levels)
    if args.rate_levels is not None:
        kwargs["rate_levels"] = tuple(args.rate_levels)
    if args.clients is not None:
        kwargs["client_counts"] = tuple(args.clients)
    cfg = experiments.SweepConfig(
        generator=gen,
        seeds=tuple(range(args.seeds)),
        gamma_override=args.gamma,
        robustness_threshold=args.threshold,
        workers=args.workers,
        **kwargs,
    )
    results = experiments.run_sweep(cfg)
    out = args.out or (Path(_default_out_dir()) / "sweep.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    experiments.save_sweep(results, out)
    optimal = sum(1 for c in results.cells if c.status == "optimal")
    print(f"{out}: {len(results.cells)} cells ({optimal} optimal, {len(results.cells) - optimal} infeasible)")
    return EXIT_OK


def cmd_report(args) -> int:
    results = experiments.load_sweep(args.sweep)
    out_dir = args.out_dir or Path(_default_out_dir())
    written = experiments.render_report(results, out_dir)
    for name, path in sorted(written.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def _seed_attr(args) -> None:
    # sweep derives per-cell seeds itself; generate uses --seed directly
    if not hasattr(args, "seed"):
        args.seed = 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    _seed_attr(args)
    commands = {
        "generate": cmd_generate,
        "solve": cmd_solve,
        "emit-milp": cmd_emit_milp,
        "verify": cmd_verify,
        "sweep": cmd_sweep,
        "report": cmd_report,
    }
    try:
        return commands[args.command](args)
    except pathsolver.InfeasibleInstanceError as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (instancegen.ConfigError, instancegen.GenerationError, milp.SolutionFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
