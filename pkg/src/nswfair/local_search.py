"""First-improvement swap search over the unmatched items, with certificates.

The search redistributes a universe J among the agents that value it
positively (called ``abar`` here). Each such agent is scored through the
positively shifted valuation vbar(S) = v(favorite) + v(S), so empty bundles
keep positive value and log-gains are always defined. A single move takes
item j from agent i and hands it to agent k; it is accepted when

    w_i * log(vbar_i(R_i - j) / vbar_i(R_i))
  + w_k * log(vbar_k(R_k + j) / vbar_k(R_k))  >  log(1 + eps_bar)

strictly. Scanning order is fixed (agents by index, items by index, takers by
index) and the first improving move is applied, so runs are deterministic.
The same gain expression backs :func:`verify_local_opt`, which re-checks
every triple on the final bundles, and :func:`prices`, which turns local
optimality into per-item prices with provable spending caps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .errors import AllocationError, InvariantViolation, LemmaViolation
from .instance import Instance
from .valuations import EndowedValuation, endow

__all__ = [
    "epsilon_bar",
    "SwapRecord",
    "LocalOptCertificate",
    "LocalSearchResult",
    "local_search",
    "verify_local_opt",
    "PriceVector",
    "prices",
    "SpendingReport",
    "check_spending",
]

SPENDING_TOLERANCE = 1e-9


def epsilon_bar(eps: float, m: int) -> float:
    """Per-swap improvement threshold: (1 + eps)^(1/m) - 1, computed stably.

    >>> epsilon_bar(0.1, 1)
    0.1
    >>> epsilon_bar(3.0, 2)
    1.0
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    return math.expm1(math.log1p(eps) / m)


@dataclass(frozen=True)
class SwapRecord:
    step: int
    giver: str
    item: str
    taker: str
    log_gain: float


@dataclass(frozen=True)
class LocalOptCertificate:
    """Summary of the final full scan that found no improving move."""

    triples_checked: int
    max_log_gain: float
    threshold: float


@dataclass(frozen=True)
class LocalSearchResult:
    bundles: Dict[str, FrozenSet[str]]
    abar: Tuple[str, ...]
    favorites: Dict[str, str]
    swaps: int
    trace: Tuple[SwapRecord, ...]
    certificate: LocalOptCertificate


class _Context:
    """Shared setup: abar membership and shifted valuations for a universe J."""

    def __init__(self, inst: Instance, universe: Iterable[str]):
        self.inst = inst
        self.universe = inst.sort_items(universe)
        self.abar: List[str] = []
        self.endowed: Dict[str, EndowedValuation] = {}
        for agent, v in zip(inst.agents, inst.valuations):
            if self.universe and v.value(self.universe) > 0.0:
                self.abar.append(agent)
                self.endowed[agent] = endow(v, self.universe)

    def log_vbar(self, agent: str, bundle: Iterable[str]) -> float:
        return math.log(self.endowed[agent].value(bundle))

    def swap_log_gain(
        self, giver: str, item: str, taker: str, bundles: Mapping[str, set]
    ) -> float:
        w = self.inst.weight_floats
        idx = self.inst.agent_index
        r_i = bundles[giver]
        r_k = bundles[taker]
        gain_i = self.log_vbar(giver, r_i - {item}) - self.log_vbar(giver, r_i)
        gain_k = self.log_vbar(taker, r_k | {item}) - self.log_vbar(taker, r_k)
        return w[idx[giver]] * gain_i + w[idx[taker]] * gain_k


def local_search(inst: Instance, universe: Iterable[str], eps_bar: float) -> LocalSearchResult:
    """Redistribute ``universe`` into an eps_bar-local optimum.

    Agents valuing the universe at zero receive nothing and take no part.
    Initially the smallest-index participating agent holds everything.
    """
    if eps_bar < 0:
        raise ValueError("eps_bar must be nonnegative")
    ctx = _Context(inst, universe)
    bundles: Dict[str, set] = {a: set() for a in inst.agents}
    if ctx.abar:
        bundles[ctx.abar[0]] = set(ctx.universe)
    threshold = math.log1p(eps_bar)
    max_swaps = None
    if eps_bar > 0 and ctx.universe:
        max_swaps = int(math.log(len(ctx.universe) + 1) / math.log1p(eps_bar)) + 4
    swaps = 0
    trace: List[SwapRecord] = []
    certificate = None
    while certificate is None:
        triples = 0
        max_gain = float("-inf")
        moved = False
        for giver in ctx.abar:
            items = inst.sort_items(bundles[giver])
            for item in items:
                for taker in ctx.abar:
                    if taker == giver:
                        continue
                    gain = ctx.swap_log_gain(giver, item, taker, bundles)
                    triples += 1
                    if gain > max_gain:
                        max_gain = gain
                    if gain > threshold:
                        bundles[giver].discard(item)
                        bundles[taker].add(item)
                        swaps += 1
                        trace.append(SwapRecord(swaps, giver, item, taker, gain))
                        if max_swaps is not None and swaps > max_swaps:
                            raise InvariantViolation(
                                f"swap count {swaps} exceeded the certified bound {max_swaps}"
                            )
                        moved = True
                        break
                if moved:
                    break
            if moved:
                break
        if not moved:
            certificate = LocalOptCertificate(
                triples_checked=triples,
                max_log_gain=max_gain if triples else float("-inf"),
                threshold=threshold,
            )
    return LocalSearchResult(
        bundles={a: frozenset(b) for a, b in bundles.items()},
        abar=tuple(ctx.abar),
        favorites={a: ctx.endowed[a].favorite for a in ctx.abar},
        swaps=swaps,
        trace=tuple(trace),
        certificate=certificate,
    )


def _context_for_bundles(inst: Instance, bundles: Mapping[str, Iterable[str]]) -> Tuple[_Context, Dict[str, set]]:
    union: set = set()
    sets: Dict[str, set] = {a: set() for a in inst.agents}
    for agent, bundle in bundles.items():
        if agent not in inst.agent_index:
            raise AllocationError(f"unknown agent {agent!r}")
        b = set(bundle)
        if union & b:
            raise AllocationError("bundles overlap")
        union |= b
        sets[agent] = b
    ctx = _Context(inst, union)
    holders = {a for a, b in sets.items() if b}
    outside = holders - set(ctx.abar)
    if outside:
        raise AllocationError(
            f"agents {sorted(outside)} hold items but value the universe at zero"
        )
    return ctx, sets


def verify_local_opt(
    inst: Instance, bundles: Mapping[str, Iterable[str]], eps_bar: float
) -> List[Tuple[str, str, str]]:
    """Exhaustively re-check local optimality of ``bundles``.

    Returns every (giver, taker, item) triple whose swap gain strictly beats
    log(1 + eps_bar); the empty list certifies an eps_bar-local optimum. The
    gain expression is shared with :func:`local_search`, so verifying a
    search output is exact, not a tolerance game.
    """
    ctx, sets = _context_for_bundles(inst, bundles)
    threshold = math.log1p(eps_bar)
    violations: List[Tuple[str, str, str]] = []
    for giver in ctx.abar:
        for item in inst.sort_items(sets[giver]):
            for taker in ctx.abar:
                if taker == giver:
                    continue
                if ctx.swap_log_gain(giver, item, taker, sets) > threshold:
                    violations.append((giver, taker, item))
    return violations


@dataclass(frozen=True)
class PriceVector:
    """Per-item prices extracted from a local optimum.

    Asymmetric variant: p_j = w_i * log(vbar_i(R_i) / vbar_i(R_i - j)).
    Symmetric variant:  p_j = vbar_i(R_i) / vbar_i(R_i - j) - 1, always <= 1.
    """

    variant: str
    values: Dict[str, float]

    def total(self, items: Iterable[str]) -> float:
        return float(sum(self.values[j] for j in sorted(items)))


def prices(inst: Instance, bundles: Mapping[str, Iterable[str]], variant: str) -> PriceVector:
    if variant not in ("asymmetric", "symmetric"):
        raise ValueError(f"variant must be 'asymmetric' or 'symmetric', got {variant!r}")
    ctx, sets = _context_for_bundles(inst, bundles)
    w = inst.weight_floats
    idx = inst.agent_index
    values: Dict[str, float] = {}
    for agent in ctx.abar:
        for item in inst.sort_items(sets[agent]):
            with_item = ctx.endowed[agent].value(sets[agent])
            without = ctx.endowed[agent].value(sets[agent] - {item})
            if variant == "asymmetric":
                values[item] = w[idx[agent]] * (math.log(with_item) - math.log(without))
            else:
                p = with_item / without - 1.0
                if p > 1.0 + SPENDING_TOLERANCE:
                    raise LemmaViolation(
                        f"symmetric price of {item!r} is {p}, above 1", agent=agent
                    )
                values[item] = p
    return PriceVector(variant=variant, values=values)


@dataclass(frozen=True)
class SpendingReport:
    variant: str
    per_agent: Dict[str, Tuple[float, float]]  # agent -> (spent, cap)
    total_spent: float
    total_cap: float


def check_spending(
    inst: Instance, price_vector: PriceVector, bundles: Mapping[str, Iterable[str]]
) -> SpendingReport:
    """Check the budget caps implied by local optimality, with 1e-9 slack.

    Asymmetric prices: each agent spends at most its weight and the whole
    universe costs at most 1. Symmetric prices: each agent spends at most 1
    and the universe costs at most the number of participating agents.
    Violations raise :class:`LemmaViolation` naming the offending agent.
    """
    ctx, sets = _context_for_bundles(inst, bundles)
    w = inst.weight_floats
    idx = inst.agent_index
    per_agent: Dict[str, Tuple[float, float]] = {}
    total = 0.0
    for agent in ctx.abar:
        spent = price_vector.total(sets[agent])
        cap = w[idx[agent]] if price_vector.variant == "asymmetric" else 1.0
        if spent > cap + SPENDING_TOLERANCE:
            raise LemmaViolation(
                f"agent {agent!r} spends {spent} over cap {cap} ({price_vector.variant})",
                agent=agent,
            )
        per_agent[agent] = (spent, cap)
        total += spent
    total_cap = 1.0 if price_vector.variant == "asymmetric" else float(len(ctx.abar))
    if total > total_cap + SPENDING_TOLERANCE:
        raise LemmaViolation(
            f"universe spending {total} exceeds cap {total_cap} ({price_vector.variant})"
        )
    return SpendingReport(
        variant=price_vector.variant,
        per_agent=per_agent,
        total_spent=total,
        total_cap=total_cap,
    )
