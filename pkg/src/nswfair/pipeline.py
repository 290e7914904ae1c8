"""Three-phase Nash welfare solver: match, redistribute, rematch.

Phase 1 endows every agent with one item through a max-weight matching on
single-item scores w_i * log v_i(j); if no agent-covering matching with
positive values exists, no complete allocation has positive welfare and an
arbitrary complete allocation flagged ``log_nsw = -inf`` is returned.
Phase 2 runs the swap local search on the leftover universe J with threshold
eps_bar = (1 + eps)^(1/m) - 1. Phase 3 rematches the phase-1 items on top of
the local-search bundles, maximizing sum_i w_i * log v_i(R_i + sigma(i)).

The report embeds verification certificates (exhaustive local-optimality
recheck and both spending-cap checks) plus the approximation factors
implied by the instance's weight profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

from .errors import InvariantViolation
from .instance import (
    Allocation,
    Instance,
    complete_with_leftovers,
    nsw_log,
    validate,
)
from .local_search import (
    LocalSearchResult,
    SpendingReport,
    check_spending,
    epsilon_bar,
    local_search,
    prices,
    verify_local_opt,
)
from .matching import NEG_INF, ScoreTable, solve_assignment

__all__ = ["phi", "GuaranteeFactors", "guarantee_factor", "SolveCertificates", "SolveReport", "solve_nsw"]

_LN2 = math.log(2.0)


def phi(nu: float) -> float:
    """sup over x in (0, 1] of 2^(1-x) * (1 + nu/x)^x.

    The log objective is concave in x, so a golden-section search plus the
    two boundary candidates (x -> 0 gives 2, x = 1 gives 1 + nu) pins the
    supremum to about 1e-9. phi(0) = 2, phi(nu) <= nu + 2 always, and the
    maximum sits at x = 1 with value nu + 1 once nu >= 3.5.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")

    def g(x: float) -> float:
        return (1.0 - x) * _LN2 + x * math.log1p(nu / x)

    lo, hi = 1e-12, 1.0
    inv_gold = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_gold * (hi - lo)
    x2 = lo + inv_gold * (hi - lo)
    g1, g2 = g(x1), g(x2)
    while hi - lo > 1e-12:
        if g1 < g2:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + inv_gold * (hi - lo)
            g2 = g(x2)
        else:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - inv_gold * (hi - lo)
            g1 = g(x1)
    best = max(g((lo + hi) / 2.0), _LN2, math.log1p(nu))
    return math.exp(best)


@dataclass(frozen=True)
class GuaranteeFactors:
    """Approximation factors valid for the instance's weight profile.

    ``symmetric`` is 4 + eps and only applies under equal weights (None
    otherwise); ``asymmetric`` is (n * w_max + 2 + eps) * e; ``strong`` is
    (phi(n * w_max) + eps) * e and dominates the plain asymmetric factor.
    """

    symmetric: Optional[float]
    asymmetric: float
    strong: float

    def best(self) -> float:
        candidates = [self.asymmetric, self.strong]
        if self.symmetric is not None:
            candidates.append(self.symmetric)
        return min(candidates)


def guarantee_factor(inst: Instance, eps: float) -> GuaranteeFactors:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    nu = float(inst.n * max(inst.weights))
    return GuaranteeFactors(
        symmetric=(4.0 + eps) if inst.is_symmetric() else None,
        asymmetric=(nu + 2.0 + eps) * math.e,
        strong=(phi(nu) + eps) * math.e,
    )


@dataclass(frozen=True)
class SolveCertificates:
    local_opt_violations: Tuple[Tuple[str, str, str], ...]
    spending_asymmetric: Optional[SpendingReport]
    spending_symmetric: Optional[SpendingReport]
    swap_limit: float


@dataclass(frozen=True)
class SolveReport:
    allocation: Allocation
    log_nsw: float
    feasible: bool
    tau: Dict[str, str]
    matched_items: FrozenSet[str]
    leftover_universe: FrozenSet[str]
    search_bundles: Dict[str, FrozenSet[str]]
    sigma: Dict[str, str]
    swaps: int
    eps: float
    eps_bar: float
    guarantee: GuaranteeFactors
    certificates: SolveCertificates
    search: Optional[LocalSearchResult]

    def nsw(self) -> float:
        return math.exp(self.log_nsw) if self.log_nsw != NEG_INF else 0.0

    def to_json(self) -> dict:
        def num(x: float):
            return "-inf" if x == NEG_INF else x

        return {
            "log_nsw": num(self.log_nsw),
            "nsw": self.nsw(),
            "feasible": self.feasible,
            "allocation": {a: sorted(b) for a, b in sorted(self.allocation.bundles.items())},
            "tau": dict(sorted(self.tau.items())),
            "matched_items": sorted(self.matched_items),
            "leftover_universe": sorted(self.leftover_universe),
            "search_bundles": {a: sorted(b) for a, b in sorted(self.search_bundles.items())},
            "sigma": dict(sorted(self.sigma.items())),
            "swaps": self.swaps,
            "eps": self.eps,
            "eps_bar": self.eps_bar,
            "guarantee": {
                "symmetric": self.guarantee.symmetric,
                "asymmetric": self.guarantee.asymmetric,
                "strong": self.guarantee.strong,
            },
            "certificates": {
                "local_opt_violations": [list(v) for v in self.certificates.local_opt_violations],
                "swap_limit": self.certificates.swap_limit,
                "spending": {
                    variant: (
                        None
                        if report is None
                        else {
                            "per_agent": {
                                a: {"spent": s, "cap": c} for a, (s, c) in sorted(report.per_agent.items())
                            },
                            "total_spent": report.total_spent,
                            "total_cap": report.total_cap,
                        }
                    )
                    for variant, report in (
                        ("asymmetric", self.certificates.spending_asymmetric),
                        ("symmetric", self.certificates.spending_symmetric),
                    )
                },
            },
        }


def _infeasible_report(inst: Instance, eps: float, eps_bar: float) -> SolveReport:
    bundles = {a: frozenset() for a in inst.agents}
    if inst.agents:
        bundles[inst.agents[0]] = frozenset(inst.items)
    allocation = Allocation(bundles)
    return SolveReport(
        allocation=allocation,
        log_nsw=NEG_INF,
        feasible=False,
        tau={},
        matched_items=frozenset(),
        leftover_universe=frozenset(),
        search_bundles={a: frozenset() for a in inst.agents},
        sigma={},
        swaps=0,
        eps=eps,
        eps_bar=eps_bar,
        guarantee=guarantee_factor(inst, eps),
        certificates=SolveCertificates((), None, None, 0.0),
        search=None,
    )


def solve_nsw(inst: Instance, eps: float) -> SolveReport:
    """Approximately maximize weighted Nash welfare over complete allocations.

    ``eps > 0`` trades accuracy for swap count: the factor is 4 + eps under
    equal weights and (n * w_max + 2 + eps) * e in general, while the number
    of swaps stays within log(m) / log(1 + eps_bar).
    """
    problems = validate(inst)
    if problems:
        raise ValueError("; ".join(problems))
    if eps <= 0:
        raise ValueError("eps must be positive")
    if inst.m == 0:
        return _infeasible_report(inst, eps, 0.0)
    eps_bar = epsilon_bar(eps, inst.m)
    if inst.m < inst.n:
        return _infeasible_report(inst, eps, eps_bar)
    w = inst.weight_floats

    def item_score(i: int, j: int) -> float:
        val = inst.valuations[i].value([inst.items[j]])
        return w[i] * math.log(val) if val > 0.0 else NEG_INF

    phase1 = solve_assignment(
        ScoreTable.from_rows([[item_score(i, j) for j in range(inst.m)] for i in range(inst.n)])
    )
    if phase1.total == NEG_INF:
        return _infeasible_report(inst, eps, eps_bar)
    tau = {inst.agents[i]: inst.items[c] for i, c in enumerate(phase1.assignment)}
    matched = frozenset(tau.values())
    universe = frozenset(inst.items) - matched

    search = local_search(inst, universe, eps_bar)

    h_items = inst.sort_items(matched)

    def rematch_score(i: int, j: int) -> float:
        agent = inst.agents[i]
        val = inst.valuations[i].value(search.bundles[agent] | {h_items[j]})
        return w[i] * math.log(val) if val > 0.0 else NEG_INF

    phase3 = solve_assignment(
        ScoreTable.from_rows([[rematch_score(i, j) for j in range(len(h_items))] for i in range(inst.n)])
    )
    if phase3.total == NEG_INF:
        raise InvariantViolation("rematching lost the finite matching inherited from phase 1")
    sigma = {inst.agents[i]: h_items[c] for i, c in enumerate(phase3.assignment)}

    allocation = Allocation(
        {a: frozenset(search.bundles[a] | {sigma[a]}) for a in inst.agents}
    )
    allocation = complete_with_leftovers(inst, allocation)

    violations = tuple(verify_local_opt(inst, search.bundles, eps_bar))
    price_asym = prices(inst, search.bundles, "asymmetric")
    price_sym = prices(inst, search.bundles, "symmetric")
    certificates = SolveCertificates(
        local_opt_violations=violations,
        spending_asymmetric=check_spending(inst, price_asym, search.bundles),
        spending_symmetric=check_spending(inst, price_sym, search.bundles),
        swap_limit=math.log(inst.m) / math.log1p(eps_bar) + 1.0 if inst.m > 1 else 1.0,
    )
    return SolveReport(
        allocation=allocation,
        log_nsw=nsw_log(inst, allocation),
        feasible=True,
        tau=tau,
        matched_items=matched,
        leftover_universe=universe,
        search_bundles=dict(search.bundles),
        sigma=sigma,
        swaps=search.swaps,
        eps=eps,
        eps_bar=eps_bar,
        guarantee=guarantee_factor(inst, eps),
        certificates=certificates,
        search=search,
    )
