"""Linearized robust MILP: construction, LP-format exchange, verification.

The model carries, per client, binary service-arc selections and
transshipment indicators, the outbound day, the adversary's deviation
degrees, early/late spans, the dual variables of the budgeted inner
maximization, and the products linearizing deviation-times-selection.
The builder is faithful to the formulation; solving is left to external
tools (any LP-format-speaking MILP solver), plus an in-repo exhaustive
enumeration for tiny models used in verification.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .model import (
    ClientOrder,
    CostParams,
    DisruptionProfile,
    ServiceNetwork,
)
from .pathsolver import _assemble, CostBreakdown
from .worstcase import worst_case_delay

#: claimed-vs-recomputed objective gaps above this are flagged
OBJECTIVE_GAP = 1e-6
#: binary values farther than this from 0/1 draw a warning
INTEGRALITY_BAND = 1e-4


@dataclass(slots=True)
class Variable:
    name: str
    kind: str  # "binary" | "continuous"
    lb: float = 0.0
    ub: float | None = None


@dataclass(slots=True)
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str  # "<=", ">=" or "="
    rhs: float


@dataclass
class MilpModel:
    variables: dict[str, Variable] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)
    #: variable name -> domain entity tag, e.g. ("x", client_pos, arc_index)
    var_entity: dict[str, tuple] = field(default_factory=dict)
    client_ids: list[str] = field(default_factory=list)
    #: service-arc index -> (from_node, to_node), for path reconstruction
    arc_endpoints: dict[int, tuple] = field(default_factory=dict)
    #: client position -> (origin, destination)
    client_terminals: list[tuple] = field(default_factory=list)

    def add_var(self, name: str, kind: str, entity: tuple, ub: float | None = None) -> str:
        self.variables[name] = Variable(name=name, kind=kind, lb=0.0, ub=ub)
        self.var_entity[name] = entity
        return name

    def add_constraint(self, name: str, coeffs: dict[str, float], sense: str, rhs: float) -> None:
        for v in coeffs:
            if v not in self.variables:
                raise KeyError(f"constraint {name!r} references unknown variable {v!r}")
        self.constraints.append(Constraint(name, dict(coeffs), sense, rhs))

    def add_objective(self, name: str, coef: float) -> None:
        if coef == 0.0:
            return
        self.objective[name] = self.objective.get(name, 0.0) + coef


def build_model(
    net: ServiceNetwork,
    orders: list[ClientOrder] | tuple[ClientOrder, ...],
    profile: DisruptionProfile,
    costs: CostParams,
) -> MilpModel:
    """Assemble the full linearized robust MILP for the instance.

    Deterministic naming: ``x_c{c}_v{k}``, ``z_c{c}_i{i}_s{a}_s{b}``,
    ``w_c{c}``, ``u_c{c}_v{k}``, ``ux_c{c}_v{k}``, ``lam_c{c}``,
    ``th_c{c}_v{k}``, ``km_c{c}``, ``kp_c{c}`` with ``c`` the client
    position, ``k`` the service-arc index, ``i`` the position in the sorted
    node list and ``a``/``b`` service positions.
    """
    orders = list(orders)
    m = MilpModel(client_ids=[o.client for o in orders])
    arcs = net.service_arcs
    m.arc_endpoints = {a.index: (a.from_node, a.to_node) for a in arcs}
    m.client_terminals = [(net.origin, o.destination) for o in orders]
    nodes = net.sorted_nodes()
    services = [s.id for s in net.services]
    gamma = profile.budget
    t_nom = [a.nominal_time for a in arcs]
    t_hat = [profile.effective_deviation(a) for a in arcs]
    psi = costs.degradation_per_unit_day

    into_by_service: dict[tuple[str, object], list[int]] = {}
    out_by_service: dict[tuple[str, object], list[int]] = {}
    for a in arcs:
        into_by_service.setdefault((a.service, a.to_node), []).append(a.index)
        out_by_service.setdefault((a.service, a.from_node), []).append(a.index)

    for c, order in enumerate(orders):
        q = order.quantity
        x = [m.add_var(f"x_c{c}_v{k}", "binary", ("x", c, k)) for k in range(len(arcs))]
        z: dict[tuple[int, int], str] = {}
        for i, node in enumerate(nodes):
            for a_pos, sa in enumerate(services):
                for b_pos, sb in enumerate(services):
                    name = m.add_var(
                        f"z_c{c}_i{i}_s{a_pos}_s{b_pos}", "binary", ("z", c, node, sa, sb)
                    )
                    z[(i, a_pos, b_pos)] = name
        w = m.add_var(f"w_c{c}", "continuous", ("w", c))
        u = [m.add_var(f"u_c{c}_v{k}", "continuous", ("u", c, k), ub=1.0) for k in range(len(arcs))]
        ux = [m.add_var(f"ux_c{c}_v{k}", "continuous", ("ux", c, k)) for k in range(len(arcs))]
        lam = m.add_var(f"lam_c{c}", "continuous", ("lam", c))
        th = [m.add_var(f"th_c{c}_v{k}", "continuous", ("th", c, k)) for k in range(len(arcs))]
        km = m.add_var(f"km_c{c}", "continuous", ("km", c))
        kp = m.add_var(f"kp_c{c}", "continuous", ("kp", c))

        # objective: transport, transshipment, degradation (via the dual
        # form of the worst-case time), early/late penalties
        for k, arc in enumerate(arcs):
            m.add_objective(x[k], arc.unit_cost * q + psi * q * t_nom[k])
        for i, node in enumerate(nodes):
            for a_pos, sa in enumerate(services):
                for b_pos, sb in enumerate(services):
                    fee = costs.transfer_cost(node, sa, sb, default=0.0)
                    m.add_objective(z[(i, a_pos, b_pos)], fee * q)
        m.add_objective(w, psi * q)
        m.add_objective(lam, psi * q * gamma)
        for k in range(len(arcs)):
            m.add_objective(th[k], psi * q)
        m.add_objective(km, costs.early_penalty_per_day * q)
        m.add_objective(kp, costs.late_penalty_per_day * q)

        # unit outflow from the origin / unit inflow into the destination
        m.add_constraint(
            f"src_c{c}",
            {x[k]: 1.0 for k in _incident_arcs(arcs, net.origin, incoming=False)},
            "=",
            1.0,
        )
        m.add_constraint(
            f"dst_c{c}",
            {x[k]: 1.0 for k in _incident_arcs(arcs, order.destination, incoming=True)},
            "=",
            1.0,
        )
        # flow balance at every other node that touches a service-arc
        for i, node in enumerate(nodes):
            if node == net.origin or node == order.destination:
                continue
            coeffs: dict[str, float] = {}
            for k in _incident_arcs(arcs, node, incoming=True):
                coeffs[x[k]] = coeffs.get(x[k], 0.0) + 1.0
            for k in _incident_arcs(arcs, node, incoming=False):
                coeffs[x[k]] = coeffs.get(x[k], 0.0) - 1.0
            if coeffs:
                m.add_constraint(f"flow_c{c}_n{i}", coeffs, "=", 0.0)
        # transshipment indicator forcing
        for i, node in enumerate(nodes):
            for a_pos, sa in enumerate(services):
                arcs_in = into_by_service.get((sa, node), ())
                if not arcs_in:
                    continue
                for b_pos, sb in enumerate(services):
                    arcs_out = out_by_service.get((sb, node), ())
                    if not arcs_out:
                        continue
                    coeffs = {z[(i, a_pos, b_pos)]: 1.0}
                    for k in arcs_in:
                        coeffs[x[k]] = coeffs.get(x[k], 0.0) - 1.0
                    for k in arcs_out:
                        coeffs[x[k]] = coeffs.get(x[k], 0.0) - 1.0
                    m.add_constraint(f"trans_c{c}_i{i}_s{a_pos}_s{b_pos}", coeffs, ">=", -1.0)
        # shelf life and lateness under the dualized worst case
        shelf_coeffs = {w: 1.0, lam: gamma}
        for k in range(len(arcs)):
            shelf_coeffs[x[k]] = shelf_coeffs.get(x[k], 0.0) + t_nom[k]
            shelf_coeffs[th[k]] = 1.0
        m.add_constraint(f"shelf_c{c}", dict(shelf_coeffs), "<=", costs.shelf_life)
        late_coeffs = dict(shelf_coeffs)
        late_coeffs[kp] = -1.0
        m.add_constraint(f"late_c{c}", late_coeffs, "<=", order.due_date)
        # dual feasibility of the inner maximization
        for k in range(len(arcs)):
            m.add_constraint(
                f"dual_c{c}_v{k}", {lam: 1.0, th[k]: 1.0, x[k]: -t_hat[k]}, ">=", 0.0
            )
        # earliness with the deviation-times-selection products
        early_coeffs = {w: 1.0, km: 1.0}
        for k in range(len(arcs)):
            early_coeffs[x[k]] = early_coeffs.get(x[k], 0.0) + t_nom[k]
            if t_hat[k] != 0.0:
                early_coeffs[ux[k]] = t_hat[k]
        m.add_constraint(f"early_c{c}", early_coeffs, ">=", order.due_date)
        for k in range(len(arcs)):
            m.add_constraint(f"uxx_c{c}_v{k}", {ux[k]: 1.0, x[k]: -1.0}, "<=", 0.0)
            m.add_constraint(f"uxu_c{c}_v{k}", {ux[k]: 1.0, u[k]: -1.0}, "<=", 0.0)
            m.add_constraint(
                f"uxb_c{c}_v{k}", {ux[k]: 1.0, u[k]: -1.0, x[k]: -1.0}, ">=", -1.0
            )
        # deviation budget
        m.add_constraint(f"budget_c{c}", {u[k]: 1.0 for k in range(len(arcs))}, "<=", gamma)

    return m


def _incident_arcs(arcs, node, incoming: bool) -> list[int]:
    if incoming:
        return [a.index for a in arcs if a.to_node == node]
    return [a.index for a in arcs if a.from_node == node]


# ---------------------------------------------------------------------------
# LP-format emission and parsing
# ---------------------------------------------------------------------------


def _num(v: float) -> str:
    if v == 0:
        return "0"  # never emit -0
    return f"{v:.12g}"


def _signed(v: float) -> str:
    return f"+{_num(v)}" if v >= 0 else f"-{_num(-v)}"


def _wrap(head: str, tokens: list[str], width: int = 78) -> list[str]:
    lines = [head]
    for tok in tokens:
        if len(lines[-1]) + 1 + len(tok) > width and lines[-1].strip():
            lines.append("  ")
        lines[-1] += " " + tok
    return lines


def emit_lp(model: MilpModel) -> str:
    """Render the model as CPLEX-LP-format text.

    Pure function of the model: terms sorted by variable name, constraints
    in insertion order, coefficients at 12 significant digits; identical
    models emit identical bytes.
    """
    out: list[str] = ["Minimize"]
    obj_tokens = [
        f"{_signed(model.objective[v])} {v}" for v in sorted(model.objective)
    ]
    out.extend(_wrap(" obj:", obj_tokens))
    out.append("Subject To")
    for con in model.constraints:
        tokens = [f"{_signed(con.coeffs[v])} {v}" for v in sorted(con.coeffs)]
        tokens.append(f"{con.sense} {_num(con.rhs)}")
        out.extend(_wrap(f" {con.name}:", tokens))
    out.append("Bounds")
    for name in sorted(model.variables):
        var = model.variables[name]
        if var.kind == "binary":
            continue
        if var.ub is None:
            out.append(f" {name} >= {_num(var.lb)}")
        else:
            out.append(f" {_num(var.lb)} <= {name} <= {_num(var.ub)}")
    out.append("Binaries")
    for name in sorted(model.variables):
        if model.variables[name].kind == "binary":
            out.append(f" {name}")
    out.append("End")
    return "\n".join(out) + "\n"


_SECTIONS = {
    "minimize": "objective",
    "subject to": "constraints",
    "st": "constraints",
    "s.t.": "constraints",
    "bounds": "bounds",
    "binaries": "binaries",
    "binary": "binaries",
    "end": "end",
}

_TERM_RE = re.compile(r"([+-]?\s*(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?)\s*([A-Za-z_][A-Za-z0-9_]*)")


def _parse_terms(expr: str) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    for raw_coef, name in _TERM_RE.findall(expr):
        c = raw_coef.replace(" ", "")
        if c in ("", "+"):
            val = 1.0
        elif c == "-":
            val = -1.0
        else:
            val = float(c)
        coeffs[name] = coeffs.get(name, 0.0) + val
    return coeffs


def parse_lp(text: str) -> MilpModel:
    """Read LP text emitted by this package back into a model.

    Covers the emitted dialect (named rows, explicit bounds, a Binaries
    section); variables only seen in Bounds/Binaries are registered with
    their declared kind and bounds.
    """
    model = MilpModel()
    section = None
    pending: list[str] = []  # accumulated logical line

    def ensure_var(name: str) -> None:
        if name not in model.variables:
            model.variables[name] = Variable(name=name, kind="continuous")

    def flush() -> None:
        if not pending:
            return
        logical = " ".join(pending)
        pending.clear()
        label, _, expr = logical.partition(":")
        label = label.strip()
        if section == "objective":
            for name, coef in _parse_terms(expr).items():
                ensure_var(name)
                model.objective[name] = model.objective.get(name, 0.0) + coef
            return
        mt = re.search(r"(<=|>=|=)\s*([+-]?[\d.eE+-]+)\s*$", expr)
        if not mt:
            raise ValueError(f"constraint {label!r} has no sense/rhs")
        sense, rhs = mt.group(1), float(mt.group(2))
        coeffs = _parse_terms(expr[: mt.start()])
        for name in coeffs:
            ensure_var(name)
        model.constraints.append(Constraint(label, coeffs, sense, rhs))

    for raw in text.splitlines():
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("\\"):
            continue
        key = line.strip().lower()
        if key in _SECTIONS:
            flush()
            section = _SECTIONS[key]
            continue
        if section in ("objective", "constraints"):
            if ":" in line and pending:
                flush()
            pending.append(line.strip())
        elif section == "bounds":
            two = re.match(
                r"\s*([+-]?[\d.eE+-]+)\s*<=\s*([A-Za-z_][A-Za-z0-9_]*)\s*<=\s*([+-]?[\d.eE+-]+)\s*$",
                line,
            )
            one = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*>=\s*([+-]?[\d.eE+-]+)\s*$", line)
            if two:
                lb, name, ub = float(two.group(1)), two.group(2), float(two.group(3))
                ensure_var(name)
                model.variables[name].lb = lb
                model.variables[name].ub = ub
            elif one:
                name, lb = one.group(1), float(one.group(2))
                ensure_var(name)
                model.variables[name].lb = lb
            else:
                raise ValueError(f"unsupported bounds line: {line!r}")
        elif section == "binaries":
            for name in line.split():
                ensure_var(name)
                model.variables[name].kind = "binary"
                model.variables[name].lb = 0.0
                model.variables[name].ub = 1.0
        elif section == "end":
            break
    flush()
    return model


# ---------------------------------------------------------------------------
# Solution parsing and verification
# ---------------------------------------------------------------------------


@dataclass
class ClientAssignment:
    client: str
    path: tuple[int, ...]
    outbound: float
    u: dict[int, float]
    earliness: float
    lateness: float


@dataclass
class ParsedSolution:
    assignments: list[ClientAssignment]
    model_objective: float
    warnings: list[str] = field(default_factory=list)


class SolutionFormatError(ValueError):
    pass


def parse_solution(model: MilpModel, text: str) -> ParsedSolution:
    """Read a ``name value`` solution dump against the model.

    Lines starting with ``#`` are ignored; variables absent from the text
    default to 0 (solvers commonly omit zeros).  Binary values are rounded
    at 0.5, with a warning when they stray more than the integrality band
    from an integer.  Per client, the selected service-arcs must chain into
    one origin-to-destination path.
    """
    values: dict[str, float] = {}
    warnings: list[str] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionFormatError(f"line {ln}: expected 'name value', got {line!r}")
        name, sval = parts
        if name not in model.variables:
            raise SolutionFormatError(f"line {ln}: unknown variable name {name!r}")
        values[name] = float(sval)

    model_objective = sum(model.objective.get(n, 0.0) * v for n, v in values.items())

    def val(name: str) -> float:
        return values.get(name, 0.0)

    by_client: dict[int, dict] = {}
    for name, entity in model.var_entity.items():
        kind = entity[0]
        c = entity[1]
        slot = by_client.setdefault(c, {"x": {}, "u": {}})
        if kind == "x":
            v = val(name)
            if model.variables[name].kind == "binary" and abs(v - round(v)) > INTEGRALITY_BAND:
                warnings.append(f"{name} = {v} is not integral within {INTEGRALITY_BAND}")
            slot["x"][entity[2]] = 1 if v >= 0.5 else 0
        elif kind == "u":
            slot["u"][entity[2]] = val(name)
        elif kind in ("w", "km", "kp"):
            slot[kind] = val(name)

    assignments: list[ClientAssignment] = []
    for c, cid in enumerate(model.client_ids):
        slot = by_client.get(c, {"x": {}, "u": {}})
        chosen = sorted(k for k, v in slot["x"].items() if v == 1)
        path = _reconstruct_path(model, c, chosen)
        assignments.append(
            ClientAssignment(
                client=cid,
                path=path,
                outbound=slot.get("w", 0.0),
                u={k: uv for k, uv in sorted(slot["u"].items()) if uv != 0.0},
                earliness=slot.get("km", 0.0),
                lateness=slot.get("kp", 0.0),
            )
        )
    return ParsedSolution(assignments=assignments, model_objective=model_objective, warnings=warnings)


def _reconstruct_path(model: MilpModel, c: int, chosen: list[int]) -> tuple[int, ...]:
    arcs = model.arc_endpoints
    if not chosen:
        raise SolutionFormatError(
            f"solution inconsistent: client {model.client_ids[c]!r} selects no service-arc"
        )
    origin, dest = model.client_terminals[c]
    by_from: dict[object, list[int]] = {}
    for k in chosen:
        by_from.setdefault(arcs[k][0], []).append(k)
    path: list[int] = []
    current = origin
    used: set[int] = set()
    while current != dest:
        outs = by_from.get(current, [])
        outs = [k for k in outs if k not in used]
        if len(outs) != 1:
            raise SolutionFormatError(
                f"solution inconsistent: client {model.client_ids[c]!r} has "
                f"{len(outs)} selected service-arcs leaving node {current!r}"
            )
        k = outs[0]
        used.add(k)
        path.append(k)
        current = arcs[k][1]
        if len(path) > len(chosen):
            raise SolutionFormatError(
                f"solution inconsistent: client {model.client_ids[c]!r} path does not terminate"
            )
    leftover = set(chosen) - used
    if leftover:
        raise SolutionFormatError(
            f"solution inconsistent: client {model.client_ids[c]!r} selects service-arcs "
            f"{sorted(leftover)} off the origin-destination path"
        )
    return tuple(path)


@dataclass
class VerificationReport:
    findings: list[str] = field(default_factory=list)
    recomputed_objective: float = 0.0
    claimed_objective: float | None = None

    @property
    def ok(self) -> bool:
        return not self.findings

    @property
    def objective_gap(self) -> float | None:
        if self.claimed_objective is None:
            return None
        return abs(self.recomputed_objective - self.claimed_objective)

    def __str__(self) -> str:
        lines = [f"recomputed objective: {self.recomputed_objective:.6f}"]
        if self.claimed_objective is not None:
            lines.append(f"claimed objective:    {self.claimed_objective:.6f}")
        if self.ok:
            lines.append("all checks passed")
        else:
            lines.extend(f"- {f}" for f in self.findings)
        return "\n".join(lines)


def verify_solution(
    net: ServiceNetwork,
    orders: list[ClientOrder] | tuple[ClientOrder, ...],
    profile: DisruptionProfile,
    costs: CostParams,
    assignments: ParsedSolution | list[ClientAssignment],
    claimed_objective: float | None = None,
) -> VerificationReport:
    """Independently re-check a solution against the instance.

    Recomputes the worst case of every client's path from scratch (no dual
    variables involved), checks flow structure, shelf life, penalty spans,
    and the deviation budget, and recomputes the objective; a gap beyond
    the documented tolerance against the claimed objective is flagged.
    """
    if isinstance(assignments, ParsedSolution):
        if claimed_objective is None:
            claimed_objective = assignments.model_objective
        assignments = assignments.assignments
    rep = VerificationReport(claimed_objective=claimed_objective)
    orders_by_id = {o.client: o for o in orders}
    arcs = net.service_arcs
    total = 0.0

    seen = set()
    for asg in assignments:
        seen.add(asg.client)
        order = orders_by_id.get(asg.client)
        if order is None:
            rep.findings.append(f"client {asg.client!r}: not part of the instance")
            continue
        label = f"client {asg.client!r}"
        if not asg.path:
            rep.findings.append(f"{label}: empty path")
            continue
        bad = [k for k in asg.path if not 0 <= k < len(arcs)]
        if bad:
            rep.findings.append(f"{label}: unknown service-arc indices {bad}")
            continue
        path_arcs = [arcs[k] for k in asg.path]
        if path_arcs[0].from_node != net.origin:
            rep.findings.append(f"{label}: path does not start at the origin")
        if path_arcs[-1].to_node != order.destination:
            rep.findings.append(f"{label}: path does not end at the destination")
        for a, b in zip(path_arcs[:-1], path_arcs[1:]):
            if a.to_node != b.from_node:
                rep.findings.append(
                    f"{label}: service-arcs {a.index} and {b.index} do not chain"
                )
        visited = [path_arcs[0].from_node] + [a.to_node for a in path_arcs]
        if len(set(visited)) != len(visited):
            rep.findings.append(f"{label}: path repeats a node")
        if asg.outbound < -1e-9:
            rep.findings.append(f"{label}: negative outbound day")

        effective = [replace(a, max_deviation=profile.effective_deviation(a)) for a in path_arcs]
        wc = worst_case_delay(effective, profile.budget)
        arrival = asg.outbound + wc.total_time
        if arrival > costs.shelf_life + OBJECTIVE_GAP:
            rep.findings.append(
                f"{label}: worst-case arrival {arrival:.6f} violates shelf life {costs.shelf_life}"
            )
        if asg.lateness < max(arrival - order.due_date, 0.0) - OBJECTIVE_GAP:
            rep.findings.append(f"{label}: late span {asg.lateness:.6f} below worst-case lateness")
        if asg.earliness < max(order.due_date - arrival, 0.0) - OBJECTIVE_GAP:
            rep.findings.append(f"{label}: early span {asg.earliness:.6f} below worst-case earliness")
        used_budget = sum(asg.u.values())
        if used_budget > profile.budget + 1e-9:
            rep.findings.append(
                f"{label}: deviation budget violated ({used_budget:.9f} > {profile.budget})"
            )
        for k, uv in asg.u.items():
            if not -1e-9 <= uv <= 1.0 + 1e-9:
                rep.findings.append(f"{label}: u[{k}] = {uv} outside [0, 1]")

        transport = sum(a.unit_cost for a in path_arcs)
        fees = 0.0
        for a, b in zip(path_arcs[:-1], path_arcs[1:]):
            if a.to_node == b.from_node:
                fees += costs.transfer_cost(a.to_node, a.service, b.service, default=0.0)
        total += _assemble(order, costs, transport, fees, wc.total_time, max(asg.outbound, 0.0)).total

    for cid in orders_by_id:
        if cid not in seen:
            rep.findings.append(f"client {cid!r}: missing from the solution")

    rep.recomputed_objective = total
    if claimed_objective is not None and abs(total - claimed_objective) > OBJECTIVE_GAP:
        rep.findings.append(
            f"objective gap {abs(total - claimed_objective):.9f} between recomputed "
            f"({total:.6f}) and claimed ({claimed_objective:.6f})"
        )
    return rep


def itineraries_to_assignments(itineraries, orders) -> list[ClientAssignment]:
    """Convert solver output into the assignment form used by verification."""
    orders_by_id = {o.client: o for o in orders}
    out = []
    for it in itineraries:
        order = orders_by_id[it.client]
        arrival = it.outbound_day + it.worst_case.total_time
        out.append(
            ClientAssignment(
                client=it.client,
                path=it.arc_indices,
                outbound=it.outbound_day,
                u={k: v for k, v in it.worst_case.u_assignment.items() if v != 0.0},
                earliness=max(order.due_date - arrival, 0.0),
                lateness=max(arrival - order.due_date, 0.0),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Exhaustive optimum for tiny models
# ---------------------------------------------------------------------------

ENUMERATION_LIMIT = 16


def enumerate_tiny_optimum(model: MilpModel) -> float:
    """Optimal objective of a tiny model by exhaustive enumeration.

    Enumerates every assignment of the service-arc selection binaries per
    client, forces the transshipment binaries to their minimal feasible
    values, and solves the remaining continuous program with an LP solver.
    Only usable on models whose per-client selection block is at most
    ``ENUMERATION_LIMIT`` wide; intended for verification, not production.
    """
    from scipy.optimize import linprog

    groups: dict[int, dict[str, list[str]]] = {}
    for name, entity in model.var_entity.items():
        c = entity[1]
        g = groups.setdefault(c, {"x": [], "z": [], "cont": []})
        if entity[0] == "x":
            g["x"].append(name)
        elif entity[0] == "z":
            g["z"].append(name)
        else:
            g["cont"].append(name)

    rows_by_client: dict[int, dict[str, list[Constraint]]] = {
        c: {"x": [], "zforce": [], "cont": []} for c in groups
    }
    for con in model.constraints:
        cs = {model.var_entity[v][1] for v in con.coeffs}
        if len(cs) != 1:
            raise ValueError(f"constraint {con.name!r} couples clients {sorted(cs)}")
        c = cs.pop()
        kinds = {model.var_entity[v][0] for v in con.coeffs}
        if kinds <= {"x"}:
            rows_by_client[c]["x"].append(con)
        elif "z" in kinds and kinds <= {"x", "z"}:
            rows_by_client[c]["zforce"].append(con)
        else:
            rows_by_client[c]["cont"].append(con)

    grand_total = 0.0
    for c in sorted(groups):
        g = groups[c]
        x_names = sorted(g["x"], key=lambda n: model.var_entity[n][2])
        if len(x_names) > ENUMERATION_LIMIT:
            raise ValueError(
                f"client block has {len(x_names)} selection binaries; "
                f"enumeration is limited to {ENUMERATION_LIMIT}"
            )
        cont_names = sorted(g["cont"])
        cont_pos = {n: i for i, n in enumerate(cont_names)}
        c_vec = [model.objective.get(n, 0.0) for n in cont_names]
        bounds = [
            (model.variables[n].lb, model.variables[n].ub) for n in cont_names
        ]

        best = float("inf")
        for mask in range(1 << len(x_names)):
            xval = {n: (mask >> i) & 1 for i, n in enumerate(x_names)}
            if any(
                not _row_holds(con, xval) for con in rows_by_client[c]["x"]
            ):
                continue
            zval, feasible = _force_z(model, rows_by_client[c]["zforce"], xval)
            if not feasible:
                continue
            fixed_obj = sum(model.objective.get(n, 0.0) * v for n, v in xval.items())
            fixed_obj += sum(model.objective.get(n, 0.0) * v for n, v in zval.items())

            a_ub, b_ub, a_eq, b_eq = [], [], [], []
            for con in rows_by_client[c]["cont"]:
                row = [0.0] * len(cont_names)
                rhs = con.rhs
                for v, coef in con.coeffs.items():
                    if v in cont_pos:
                        row[cont_pos[v]] = coef
                    else:
                        rhs -= coef * (xval.get(v, zval.get(v, 0)))
                if con.sense == "<=":
                    a_ub.append(row)
                    b_ub.append(rhs)
                elif con.sense == ">=":
                    a_ub.append([-x for x in row])
                    b_ub.append(-rhs)
                else:
                    a_eq.append(row)
                    b_eq.append(rhs)
            res = linprog(
                c_vec,
                A_ub=a_ub or None,
                b_ub=b_ub or None,
                A_eq=a_eq or None,
                b_eq=b_eq or None,
                bounds=bounds,
                method="highs",
            )
            if res.status == 0:
                best = min(best, fixed_obj + res.fun)
        if best == float("inf"):
            raise ValueError(f"client {model.client_ids[c]!r}: model infeasible")
        grand_total += best
    return grand_total


def _row_holds(con: Constraint, xval: dict[str, int]) -> bool:
    lhs = sum(coef * xval[v] for v, coef in con.coeffs.items())
    if con.sense == "<=":
        return lhs <= con.rhs + 1e-9
    if con.sense == ">=":
        return lhs >= con.rhs - 1e-9
    return abs(lhs - con.rhs) <= 1e-9


def _force_z(model: MilpModel, rows: list[Constraint], xval: dict[str, int]):
    zval: dict[str, int] = {}
    lower: dict[str, float] = {}
    for con in rows:
        z_vars = [v for v in con.coeffs if model.var_entity[v][0] == "z"]
        if len(z_vars) != 1 or con.sense != ">=":
            raise ValueError(f"unexpected transshipment row {con.name!r}")
        zv = z_vars[0]
        coef_z = con.coeffs[zv]
        rest = sum(coef * xval[v] for v, coef in con.coeffs.items() if v != zv)
        lower[zv] = max(lower.get(zv, 0.0), (con.rhs - rest) / coef_z)
    for zv, lo in lower.items():
        if lo > 1 + 1e-9:
            return {}, False
        zval[zv] = 1 if lo > 1e-9 else 0
    return zval, True
