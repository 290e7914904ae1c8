"""Exact max-weight bipartite matching in the log domain.

Absent edges stand for score -inf and are simply not represented; no large
negative sentinels appear anywhere. The solver runs successive shortest
augmenting paths (Bellman-Ford over the residual graph) with tuple-valued
edge weights compared lexicographically, which lets one pass encode

    (cardinality, total score, index preference)

exactly: cardinality and preference are Python ints and each float score is
converted once to the dyadic rational it already is, so path sums never
round. Exactness is load-bearing, not a nicety: summing floats along
relaxation paths makes (a - b) + b differ from a in the last bit, which
manufactures phantom "improvements" around zero-gain alternating cycles and
corrupts the predecessor chain. The index-preference component encodes the
column choices positionally, making the optimum unique and the output
deterministic: among equal-score matchings the agent with the smallest index
gets the smallest feasible column, and so on down.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import InfeasibleMatching, InvariantViolation, LemmaViolation

__all__ = [
    "NEG_INF",
    "ScoreTable",
    "AssignmentResult",
    "solve_assignment",
    "solve_lex_assignment",
]

NEG_INF = float("-inf")


@dataclass(frozen=True)
class ScoreTable:
    """Dense rows x cols score matrix; ``-inf`` marks an absent edge."""

    scores: Tuple[Tuple[float, ...], ...]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "ScoreTable":
        tup = tuple(tuple(float(x) for x in row) for row in rows)
        widths = {len(row) for row in tup}
        if len(widths) > 1:
            raise ValueError("score table rows must have equal length")
        return cls(tup)

    @property
    def n_rows(self) -> int:
        return len(self.scores)

    @property
    def n_cols(self) -> int:
        return len(self.scores[0]) if self.scores else 0

    def score(self, row: int, col: int) -> float:
        return self.scores[row][col]


@dataclass(frozen=True)
class AssignmentResult:
    """Row -> column matching (None marks an unmatched row) and its total score."""

    assignment: Tuple[Optional[int], ...]
    total: float


def _lex_preference(row: int, col: int, n_rows: int, n_cols: int) -> int:
    # Positional bonus: earlier rows dominate, smaller columns score higher.
    return (n_cols + 1) ** (n_rows - 1 - row) * (n_cols - col)


def _max_weight_matching(
    n_rows: int, n_cols: int, weights: Mapping[Tuple[int, int], tuple]
) -> List[Optional[int]]:
    """Maximize the componentwise sum of tuple weights, compared lexicographically.

    Every row may fall back to a private zero-weight dummy column, so "leave
    the row unmatched" is always feasible and the reduction to a
    perfect-on-rows min-cost assignment is exact.
    """
    if not weights:
        return [None] * n_rows
    arity = len(next(iter(weights.values())))
    zero = (0,) * arity
    cost: Dict[Tuple[int, int], tuple] = {}
    adjacency: List[List[int]] = [[] for _ in range(n_rows)]
    for (r, c), w in weights.items():
        if len(w) != arity:
            raise ValueError("all weight tuples must have the same arity")
        cost[(r, c)] = tuple(-x for x in w)
        adjacency[r].append(c)
    for r in range(n_rows):
        dummy = n_cols + r
        cost[(r, dummy)] = zero
        adjacency[r].append(dummy)
        adjacency[r].sort()

    match_row: List[Optional[int]] = [None] * n_rows
    match_col: Dict[int, int] = {}

    def add(a: tuple, b: tuple) -> tuple:
        return tuple(x + y for x, y in zip(a, b))

    def sub(a: tuple, b: tuple) -> tuple:
        return tuple(x - y for x, y in zip(a, b))

    for r0 in range(n_rows):
        dist: Dict[int, tuple] = {}
        prev_row: Dict[int, int] = {}
        for c in adjacency[r0]:
            w = cost[(r0, c)]
            if c not in dist or w < dist[c]:
                dist[c] = w
                prev_row[c] = r0
        passes = 0
        while True:
            improved = False
            for c in sorted(match_col):
                if c not in dist:
                    continue
                rc = match_col[c]
                base = sub(dist[c], cost[(rc, c)])
                for c2 in adjacency[rc]:
                    if c2 == c:
                        continue
                    cand = add(base, cost[(rc, c2)])
                    if c2 not in dist or cand < dist[c2]:
                        dist[c2] = cand
                        prev_row[c2] = rc
                        improved = True
            passes += 1
            if not improved:
                break
            if passes > n_rows + n_cols + 2:
                raise InvariantViolation("augmenting-path search failed to stabilize")
        target = None
        for c in sorted(dist):
            if c in match_col:
                continue
            if target is None or dist[c] < dist[target]:
                target = c
        if target is None:
            raise InvariantViolation("no free column reachable despite dummy fallback")
        c = target
        walked: set = set()
        while True:
            if c in walked:
                raise InvariantViolation("augmenting-path walk revisited a column")
            walked.add(c)
            r = prev_row[c]
            freed = match_row[r]
            match_col[c] = r
            match_row[r] = c
            if r == r0:
                break
            c = freed  # the column r abandoned needs the previous row on the path
    return [None if c is None or c >= n_cols else c for c in match_row]


def solve_assignment(table: ScoreTable, require_all_rows: bool = True) -> AssignmentResult:
    """Best matching under ``table``.

    With ``require_all_rows`` the solver covers every row when a finite-score
    perfect matching exists and otherwise returns the maximum-cardinality
    finite matching with ``total = -inf``; more rows than columns is rejected
    outright. Without it, rows are left unmatched whenever that raises the
    total score.
    """
    n, m = table.n_rows, table.n_cols
    if require_all_rows and n > m:
        raise InfeasibleMatching(f"{n} rows cannot all be matched into {m} columns")
    head = 1 if require_all_rows else 0
    weights = {
        (r, c): (head, Fraction(table.score(r, c)), _lex_preference(r, c, n, m))
        for r in range(n)
        for c in range(m)
        if table.score(r, c) != NEG_INF
    }
    assignment = _max_weight_matching(n, m, weights)
    if require_all_rows and any(c is None for c in assignment):
        total = NEG_INF
    else:
        total = float(sum(table.score(r, c) for r, c in enumerate(assignment) if c is not None))
    return AssignmentResult(tuple(assignment), total)


def solve_lex_assignment(
    n_rows: int,
    n_cols: int,
    edges: Set[Tuple[int, int]],
    must_match: Set[int],
    prefer_self: Mapping[int, int],
) -> Tuple[Optional[int], ...]:
    """Matching that (a) covers ``must_match`` columns, (b) maximizes rows kept
    on their ``prefer_self`` column, (c) has maximum cardinality, in that order.

    The priority is realized with one integer weight per edge,
    A * [col in must_match] + B * [col = prefer_self(row)] + 1 with B = n + 1
    and A = (n + 1) * (B * n + n + 1), which strictly separates the three
    tiers for any matching of at most n = ``n_rows`` edges. The caller must
    pass a graph in which covering ``must_match`` is feasible; the cover is
    re-checked and a failure raises :class:`LemmaViolation`.
    """
    b_weight = n_rows + 1
    a_weight = (n_rows + 1) * (b_weight * n_rows + n_rows + 1)
    weights = {}
    for r, c in edges:
        w = a_weight * (c in must_match) + b_weight * (prefer_self.get(r) == c) + 1
        weights[(r, c)] = (w, _lex_preference(r, c, n_rows, n_cols))
    assignment = _max_weight_matching(n_rows, n_cols, weights)
    matched_cols = {c for c in assignment if c is not None}
    uncovered = set(must_match) - matched_cols
    if uncovered:
        raise LemmaViolation(
            f"columns {sorted(uncovered)} should be matchable but were left uncovered"
        )
    return tuple(assignment)
