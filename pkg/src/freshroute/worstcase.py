"""Budgeted worst-case travel time of a fixed itinerary.

The adversary delays each service-arc by a fraction ``u`` of its maximum
deviation, subject to ``0 <= u <= 1`` per arc and ``sum(u) <= budget``
across the itinerary.  The primal optimum is a fractional-knapsack greedy;
the dual form (used by the linearized MILP) evaluates the same value from
the other side, so the two implementations cross-check each other exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ServiceArc

#: Absolute tolerance on all day/currency comparisons in this package.
TOLERANCE = 1e-9


class EmptyItineraryError(ValueError):
    pass


@dataclass(frozen=True)
class WorstCaseResult:
    total_time: float
    delay: float
    u_assignment: dict[int, float]


def worst_case_delay(path: list[ServiceArc] | tuple[ServiceArc, ...], budget: float) -> WorstCaseResult:
    """Exact maximum of ``sum(u * max_deviation)`` over the budgeted box.

    Greedy on deviations: full delay on the arcs with the largest
    ``max_deviation`` until the budget's integer part is spent, then the
    fractional remainder on the next one.  Ties are broken by ascending
    service-arc index so the assignment is deterministic.
    """
    if not path:
        raise EmptyItineraryError("empty itinerary")
    if budget < 0:
        raise ValueError("budget must be >= 0")

    u: dict[int, float] = {arc.index: 0.0 for arc in path}
    remaining = float(budget)
    delay = 0.0
    for arc in sorted(path, key=lambda a: (-a.max_deviation, a.index)):
        if remaining <= 0.0 or arc.max_deviation <= 0.0:
            break
        share = min(1.0, remaining)
        u[arc.index] = share
        delay += share * arc.max_deviation
        remaining -= share

    nominal = sum(a.nominal_time for a in path)
    return WorstCaseResult(total_time=nominal + delay, delay=delay, u_assignment=u)


def dual_path_time(path: list[ServiceArc] | tuple[ServiceArc, ...], budget: float) -> float:
    """Worst-case path time evaluated through the dual of the inner LP.

    The dual minimizes ``budget * lam + sum(theta)`` with
    ``lam + theta >= max_deviation`` per arc; a minimizer always has
    ``lam`` in ``{0} union {max_deviation of the path arcs}`` and
    ``theta = max(max_deviation - lam, 0)``.
    """
    if not path:
        raise EmptyItineraryError("empty itinerary")
    if budget < 0:
        raise ValueError("budget must be >= 0")

    nominal = sum(a.nominal_time for a in path)
    best = min(
        budget * lam + sum(max(a.max_deviation - lam, 0.0) for a in path)
        for lam in {0.0} | {a.max_deviation for a in path}
    )
    return nominal + best
