"""Exact optimum by exhaustive enumeration, for ratio checks at desk scale.

Every complete allocation is a base-n counter over the m items, enumerated
in lexicographic order so the reported argmax is the lexicographically
smallest one. The guard n^m <= 10^8 can be overridden through the
NSW_SIZE_GUARD environment variable.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Tuple

from .errors import SizeGuardExceeded
from .instance import Allocation, Instance, nsw_log, validate

__all__ = ["DEFAULT_SIZE_GUARD", "size_guard", "OptResult", "brute_force_opt", "ratio_of_logs", "ratio"]

DEFAULT_SIZE_GUARD = 10**8

NEG_INF = float("-inf")


def size_guard() -> int:
    raw = os.environ.get("NSW_SIZE_GUARD")
    return int(raw) if raw else DEFAULT_SIZE_GUARD


@dataclass(frozen=True)
class OptResult:
    opt_log: float
    argmax: Allocation
    enumerated: int


def brute_force_opt(inst: Instance) -> OptResult:
    """Maximize nsw_log over all n^m complete allocations."""
    problems = validate(inst)
    if problems:
        raise ValueError("; ".join(problems))
    n, m = inst.n, inst.m
    total = n**m
    guard = size_guard()
    if total > guard:
        raise SizeGuardExceeded(f"{n}^{m} = {total} allocations exceed the guard {guard}")
    weights = inst.weight_floats
    valuations = inst.valuations
    items = inst.items
    best_log = NEG_INF
    best_assign: Tuple[int, ...] | None = None
    for assign in itertools.product(range(n), repeat=m):
        bundles: list[list[str]] = [[] for _ in range(n)]
        for j, owner in enumerate(assign):
            bundles[owner].append(items[j])
        log_value = 0.0
        for i in range(n):
            val = valuations[i].value(bundles[i])
            if val <= 0.0:
                log_value = NEG_INF
                break
            log_value += weights[i] * math.log(val)
        if best_assign is None or log_value > best_log:
            best_log = log_value
            best_assign = assign
    assert best_assign is not None
    bundles = [[] for _ in range(n)]
    for j, owner in enumerate(best_assign):
        bundles[owner].append(items[j])
    argmax = Allocation.of({inst.agents[i]: bundles[i] for i in range(n)})
    return OptResult(opt_log=best_log, argmax=argmax, enumerated=total)


def ratio_of_logs(opt_log: float, alloc_log: float) -> float:
    """exp(opt - alloc); 1 when both are -inf, +inf when only the candidate is."""
    if opt_log == NEG_INF and alloc_log == NEG_INF:
        return 1.0
    if alloc_log == NEG_INF:
        return float("inf")
    return math.exp(opt_log - alloc_log)


def ratio(inst: Instance, alloc: Allocation) -> float:
    """How far ``alloc`` sits from the exact optimum (>= 1 up to rounding)."""
    opt = brute_force_opt(inst)
    return ratio_of_logs(opt.opt_log, nsw_log(inst, alloc))
