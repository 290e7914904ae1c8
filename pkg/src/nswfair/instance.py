"""Problem instances, allocations, and the log-domain welfare objective.

An instance fixes an ordered list of agents with exact rational weights that
sum to one, an ordered list of items, and one valuation oracle per agent.
Allocations map agents to disjoint bundles; the objective is

    nsw_log(S) = sum_i w_i * log v_i(S_i)

with ``float('-inf')`` marking any allocation that leaves some agent at
value zero. All index-based tie-breaking in the solver refers to the agent
and item orders stored here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

from .errors import AllocationError
from .valuations import Valuation, valuation_from_params

__all__ = [
    "FORMAT_VERSION",
    "Instance",
    "Allocation",
    "validate",
    "nsw_log",
    "complete_with_leftovers",
    "instance_to_json",
    "instance_from_json",
    "load_instance",
    "save_instance",
    "allocation_to_json",
    "allocation_from_json",
    "load_allocation",
    "save_allocation",
    "canonical_json",
]

FORMAT_VERSION = 1

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Instance:
    agents: Tuple[str, ...]
    weights: Tuple[Fraction, ...]
    items: Tuple[str, ...]
    valuations: Tuple[Valuation, ...]

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return len(self.items)

    @cached_property
    def agent_index(self) -> Dict[str, int]:
        return {a: i for i, a in enumerate(self.agents)}

    @cached_property
    def item_index(self) -> Dict[str, int]:
        return {g: i for i, g in enumerate(self.items)}

    @cached_property
    def weight_floats(self) -> Tuple[float, ...]:
        return tuple(float(w) for w in self.weights)

    def valuation_of(self, agent: str) -> Valuation:
        return self.valuations[self.agent_index[agent]]

    def is_symmetric(self) -> bool:
        return all(w == self.weights[0] for w in self.weights)

    def sort_items(self, items: Iterable[str]) -> List[str]:
        return sorted(items, key=self.item_index.__getitem__)


def validate(inst: Instance) -> List[str]:
    """Return a list of structural problems; empty means the instance is usable."""
    errors: List[str] = []
    if inst.n == 0:
        errors.append("instance needs at least one agent")
    if len(set(inst.agents)) != inst.n:
        errors.append("agent ids must be unique")
    if len(set(inst.items)) != inst.m:
        errors.append("item ids must be unique")
    if len(inst.weights) != inst.n or len(inst.valuations) != inst.n:
        errors.append("weights and valuations must align with the agent list")
        return errors
    for agent, w in zip(inst.agents, inst.weights):
        if w <= 0:
            errors.append(f"weight of agent {agent!r} must be positive")
    if inst.n and sum(inst.weights, Fraction(0)) != 1:
        errors.append("weights must sum to exactly 1")
    item_set = set(inst.items)
    for agent, v in zip(inst.agents, inst.valuations):
        if set(v.items) != item_set:
            errors.append(f"valuation domain of agent {agent!r} does not match the item list")
    return errors


@dataclass(frozen=True)
class Allocation:
    """Agent id -> frozen bundle. Missing agents hold the empty bundle."""

    bundles: Mapping[str, FrozenSet[str]] = field(default_factory=dict)

    @classmethod
    def of(cls, bundles: Mapping[str, Iterable[str]]) -> "Allocation":
        return cls({a: frozenset(b) for a, b in bundles.items()})

    def bundle(self, agent: str) -> FrozenSet[str]:
        return self.bundles.get(agent, frozenset())

    def allocated(self) -> FrozenSet[str]:
        out: set[str] = set()
        for b in self.bundles.values():
            out |= b
        return frozenset(out)

    def is_complete(self, inst: Instance) -> bool:
        return self.allocated() == set(inst.items)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Allocation):
            return NotImplemented
        agents = set(self.bundles) | set(other.bundles)
        return all(self.bundle(a) == other.bundle(a) for a in agents)


def _check_structure(inst: Instance, alloc: Allocation) -> None:
    seen: Dict[str, str] = {}
    item_set = set(inst.items)
    for agent, bundle in alloc.bundles.items():
        if agent not in inst.agent_index:
            raise AllocationError(f"allocation names unknown agent {agent!r}")
        foreign = bundle - item_set
        if foreign:
            raise AllocationError(f"bundle of {agent!r} contains unknown items {sorted(foreign)}")
        for j in bundle:
            if j in seen:
                raise AllocationError(f"item {j!r} appears in bundles of {seen[j]!r} and {agent!r}")
            seen[j] = agent


def nsw_log(inst: Instance, alloc: Allocation) -> float:
    """Weighted log Nash welfare; ``-inf`` when any agent's bundle has value 0."""
    _check_structure(inst, alloc)
    total = 0.0
    for agent, w in zip(inst.agents, inst.weight_floats):
        val = inst.valuation_of(agent).value(alloc.bundle(agent))
        if val <= 0.0:
            return NEG_INF
        total += w * math.log(val)
    return total


def complete_with_leftovers(inst: Instance, alloc: Allocation) -> Allocation:
    """Append each unallocated item to the smallest-index agent valuing it most.

    Items are processed in instance order; monotone valuations make the
    result's nsw_log at least the input's.
    """
    _check_structure(inst, alloc)
    bundles = {a: set(alloc.bundle(a)) for a in inst.agents}
    done = alloc.allocated()
    for j in inst.items:
        if j in done:
            continue
        winner = 0
        best = None
        for i, agent in enumerate(inst.agents):
            val = inst.valuations[i].value([j])
            if best is None or val > best:
                best = val
                winner = i
        bundles[inst.agents[winner]].add(j)
    return Allocation.of(bundles)


# ---------------------------------------------------------------------------
# JSON file formats (format_version 1)
# ---------------------------------------------------------------------------


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def instance_to_json(inst: Instance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "agents": [
            {"id": a, "weight": [w.numerator, w.denominator]}
            for a, w in zip(inst.agents, inst.weights)
        ],
        "items": list(inst.items),
        "valuations": [
            {"agent": a, "kind": v.kind, "params": v.params()}
            for a, v in zip(inst.agents, inst.valuations)
        ],
    }


def instance_from_json(doc: Mapping) -> Instance:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {doc.get('format_version')!r}")
    agents = tuple(str(entry["id"]) for entry in doc["agents"])
    weights = tuple(Fraction(int(entry["weight"][0]), int(entry["weight"][1])) for entry in doc["agents"])
    items = tuple(str(j) for j in doc["items"])
    by_agent = {entry["agent"]: entry for entry in doc["valuations"]}
    missing = set(agents) - by_agent.keys()
    if missing:
        raise ValueError(f"no valuation given for agents {sorted(missing)}")
    valuations = tuple(
        valuation_from_params(by_agent[a]["kind"], by_agent[a]["params"]) for a in agents
    )
    return Instance(agents=agents, weights=weights, items=items, valuations=valuations)


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_json(json.load(fh))


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(instance_to_json(inst)))


def allocation_to_json(inst: Instance, alloc: Allocation) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "bundles": {a: inst.sort_items(alloc.bundle(a)) for a in inst.agents},
    }


def allocation_from_json(doc: Mapping) -> Allocation:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {doc.get('format_version')!r}")
    return Allocation.of({str(a): [str(j) for j in items] for a, items in doc["bundles"].items()})


def load_allocation(path) -> Allocation:
    with open(path, "r", encoding="utf-8") as fh:
        return allocation_from_json(json.load(fh))


def save_allocation(inst: Instance, alloc: Allocation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(allocation_to_json(inst, alloc)))
