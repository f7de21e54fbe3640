"""Robust multi-modal itinerary planning for perishable goods."""

from .model import (
    ClientOrder,
    CostParams,
    DisruptionProfile,
    Instance,
    Service,
    ServiceArc,
    ServiceNetwork,
    ValidationReport,
    build_search_graph,
    load_instance,
    materialize_deviations,
    nominal_profile,
    save_instance,
    validate_instance,
    validate_network,
)
from .pathsolver import (
    CostBreakdown,
    InfeasibleClientError,
    InfeasibleInstanceError,
    InfeasibleItineraryError,
    RobustItinerary,
    brute_force_oracle,
    evaluate_itinerary,
    optimal_outbound,
    solve_client,
    solve_instance,
)
from .worstcase import TOLERANCE, WorstCaseResult, dual_path_time, worst_case_delay

__version__ = "0.1.0"

__all__ = [
    "ClientOrder",
    "CostParams",
    "CostBreakdown",
    "DisruptionProfile",
    "Instance",
    "InfeasibleClientError",
    "InfeasibleInstanceError",
    "InfeasibleItineraryError",
    "RobustItinerary",
    "Service",
    "ServiceArc",
    "ServiceNetwork",
    "TOLERANCE",
    "ValidationReport",
    "WorstCaseResult",
    "brute_force_oracle",
    "build_search_graph",
    "dual_path_time",
    "evaluate_itinerary",
    "load_instance",
    "materialize_deviations",
    "nominal_profile",
    "optimal_outbound",
    "save_instance",
    "solve_client",
    "solve_instance",
    "validate_instance",
    "validate_network",
    "worst_case_delay",
]
