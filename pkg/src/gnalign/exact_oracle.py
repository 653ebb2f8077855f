"""Exhaustive alignment search for small instances (test oracle)."""

from __future__ import annotations

import math

from .instance import Alignment, AlignmentInstance

__all__ = ["OracleBudgetError", "solve_exact", "enumerate_all_scores", "enumeration_size"]

DEFAULT_LIMIT = 7
TREE_BUDGET = 10 ** 8
ENUM_BUDGET = 10 ** 6


class OracleBudgetError(RuntimeError):
    pass


def enumeration_size(inst: AlignmentInstance) -> int:
    """Upper estimate of the search tree: product of (candidates + 1) over nodes of g1."""
    return math.prod(len(c) + 1 for c in inst.candidates)


def _prepare(inst: AlignmentInstance, limit: int, budget: int):
    if inst.n1 > limit:
        raise OracleBudgetError(f"first network has {inst.n1} nodes, oracle limit is {limit}")
    size = enumeration_size(inst)
    if size > budget:
        raise OracleBudgetError(f"enumeration tree of ~{size} nodes exceeds budget {budget}")
    n1 = inst.n1
    # earlier neighbours only: the score of (i, j) is collected when the later endpoint is placed
    back = [[j for j in inst.g1.adjacency[i] if j < i] for i in range(n1)]
    options = [[(k, inst.node_score(i, k)) for k in inst.candidates[i]] for i in range(n1)]
    return back, options


def solve_exact(inst: AlignmentInstance, limit: int = DEFAULT_LIMIT) -> tuple[float, Alignment]:
    """Maximum-score alignment by depth-first enumeration.

    Nodes of ``g1`` are placed in index order, trying "unmapped" first and
    then candidates in increasing order, and only strict improvements replace
    the incumbent; the result is therefore the lexicographically smallest
    optimal mapping (unmapped sorts first).  Pruning uses the admissible
    bound "best node score of every unplaced node plus the full weight of
    every edge with an unplaced endpoint".
    """
    back, options = _prepare(inst, limit, TREE_BUDGET)
    n1 = inst.n1
    w = inst.edge_weight
    g2 = inst.g2
    # optimistic remainder from position i onwards
    rest = [0.0] * (n1 + 1)
    for i in range(n1 - 1, -1, -1):
        best_c = max((c for _, c in options[i]), default=0.0)
        rest[i] = rest[i + 1] + max(best_c, 0.0) + w * len(back[i])

    partner = [-1] * n1
    used = [False] * g2.n
    best_val = -1.0
    best_map: list[int] = [-1] * n1

    def dfs(i: int, val: float):
        nonlocal best_val, best_map
        if i == n1:
            if val > best_val:
                best_val = val
                best_map = partner.copy()
            return
        if val + rest[i] <= best_val:
            return
        dfs(i + 1, val)
        for k, c in options[i]:
            if used[k]:
                continue
            gain = c
            if w:
                for j in back[i]:
                    l = partner[j]
                    if l >= 0 and g2.has_edge(k, l):
                        gain += w
            partner[i] = k
            used[k] = True
            dfs(i + 1, val + gain)
            used[k] = False
            partner[i] = -1

    dfs(0, 0.0)
    return best_val, Alignment(best_map)


def enumerate_all_scores(inst: AlignmentInstance, limit: int = DEFAULT_LIMIT) -> list[tuple[Alignment, float]]:
    """Every partial injective candidate-respecting mapping (the empty one included) with its score."""
    back, options = _prepare(inst, limit, ENUM_BUDGET)
    n1 = inst.n1
    w = inst.edge_weight
    g2 = inst.g2
    partner = [-1] * n1
    used = [False] * g2.n
    out: list[tuple[Alignment, float]] = []

    def dfs(i: int, val: float):
        if i == n1:
            out.append((Alignment(partner), val))
            return
        dfs(i + 1, val)
        for k, c in options[i]:
            if used[k]:
                continue
            gain = c + sum(w for j in back[i] if partner[j] >= 0 and g2.has_edge(k, partner[j]))
            partner[i] = k
            used[k] = True
            dfs(i + 1, val + gain)
            used[k] = False
            partner[i] = -1

    dfs(0, 0.0)
    return out
