"""Approximate Nash social welfare maximization for indivisible items.

A deterministic matching + swap-search + rematching solver for weighted Nash
welfare under monotone submodular valuations, with certified diagnostics, an
exhaustive exact oracle, and a 1/2-EFX fairness post-processing stage.
"""

from .efx import (
    FairnessOutcome,
    build_feasibility_graph,
    envy_cycle_complete,
    guarantee_half_efx,
    half_efx_check,
    make_fair_or_efficient,
)
from .errors import (
    AgentNotEndowable,
    AllocationError,
    InfeasibleMatching,
    InvariantViolation,
    LemmaViolation,
    SizeGuardExceeded,
    UnknownItem,
)
from .generate import FAMILIES, WEIGHT_MODES, random_instance
from .instance import (
    Allocation,
    Instance,
    complete_with_leftovers,
    load_allocation,
    load_instance,
    nsw_log,
    save_allocation,
    save_instance,
    validate,
)
from .local_search import (
    check_spending,
    epsilon_bar,
    local_search,
    prices,
    verify_local_opt,
)
from .matching import ScoreTable, solve_assignment, solve_lex_assignment
from .oracle import brute_force_opt, ratio, ratio_of_logs
from .pipeline import GuaranteeFactors, SolveReport, guarantee_factor, phi, solve_nsw
from .valuations import (
    Additive,
    BudgetAdditive,
    Coverage,
    EndowedValuation,
    ExplicitTable,
    PartitionMatroidRank,
    check_submodular,
    endow,
)

__version__ = "0.1.0"

__all__ = [
    "Additive",
    "AgentNotEndowable",
    "Allocation",
    "AllocationError",
    "BudgetAdditive",
    "Coverage",
    "EndowedValuation",
    "ExplicitTable",
    "FAMILIES",
    "FairnessOutcome",
    "GuaranteeFactors",
    "InfeasibleMatching",
    "Instance",
    "InvariantViolation",
    "LemmaViolation",
    "PartitionMatroidRank",
    "ScoreTable",
    "SizeGuardExceeded",
    "SolveReport",
    "UnknownItem",
    "WEIGHT_MODES",
    "brute_force_opt",
    "build_feasibility_graph",
    "check_spending",
    "check_submodular",
    "complete_with_leftovers",
    "endow",
    "envy_cycle_complete",
    "epsilon_bar",
    "guarantee_factor",
    "guarantee_half_efx",
    "half_efx_check",
    "load_allocation",
    "load_instance",
    "local_search",
    "make_fair_or_efficient",
    "nsw_log",
    "phi",
    "prices",
    "random_instance",
    "ratio",
    "ratio_of_logs",
    "save_allocation",
    "save_instance",
    "solve_assignment",
    "solve_lex_assignment",
    "solve_nsw",
    "validate",
    "verify_local_opt",
]
