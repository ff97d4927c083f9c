"""Minimum-weight perfect matching on dense symmetric cost matrices.

The exact matcher delegates to networkx's blossom implementation
(max-weight matching on negated costs, maximum cardinality forced), which
is the standard O(u^3) primal-dual algorithm.  The greedy matcher is the
usual ascending-cost edge scan.  ``enumerate_pairings`` walks all
(u-1)!! perfect matchings and is only meant for small u.
"""

from __future__ import annotations

from typing import Iterator

import networkx as nx
import numpy as np

from .core import Pairing, canonical_pairing
from .errors import OddSizeError, ShapeMismatchError


def check_cost_matrix(costs: np.ndarray) -> np.ndarray:
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise ShapeMismatchError(f"cost matrix must be square, got shape {costs.shape}")
    if costs.shape[0] % 2 != 0 or costs.shape[0] < 2:
        raise OddSizeError(f"need an even number of units >= 2, got {costs.shape[0]}")
    if not np.allclose(costs, costs.T, rtol=0, atol=1e-9 * max(1.0, float(np.abs(costs).max()))):
        raise ShapeMismatchError("cost matrix must be symmetric")
    return costs


def matching_cost(costs: np.ndarray, pairing) -> float:
    return float(sum(costs[a, b] for a, b in pairing))


def enumerate_pairings(size: int) -> Iterator[Pairing]:
    """All perfect matchings of range(size), in lexicographic order.

    (size-1)!! of them; keep size <= 12 or so.
    """
    if size % 2 != 0:
        raise OddSizeError(f"no perfect matching of {size} units")

    def rec(rest: tuple[int, ...]) -> Iterator[tuple[tuple[int, int], ...]]:
        if not rest:
            yield ()
            return
        a = rest[0]
        for i in range(1, len(rest)):
            b = rest[i]
            for tail in rec(rest[1:i] + rest[i + 1 :]):
                yield ((a, b),) + tail

    yield from rec(tuple(range(size)))


def match_exact(costs: np.ndarray) -> Pairing:
    """Perfect matching minimizing the summed pairwise cost (blossom)."""
    costs = check_cost_matrix(costs)
    u = costs.shape[0]
    if u == 2:
        return ((0, 1),)
    graph = nx.Graph()
    for a in range(u):
        for b in range(a + 1, u):
            graph.add_edge(a, b, weight=-costs[a, b])
    matching = nx.max_weight_matching(graph, maxcardinality=True)
    return canonical_pairing(matching)


def match_greedy(costs: np.ndarray) -> Pairing:
    """Ascending-cost edge scan; each edge is taken if both ends are free.

    O(u^2 log u); a 1/2-approximation heuristic.  Ties are broken by
    (cost, a, b) lexicographic order, which keeps the result deterministic.
    """
    costs = check_cost_matrix(costs)
    u = costs.shape[0]
    a_idx, b_idx = np.triu_indices(u, k=1)
    order = np.lexsort((b_idx, a_idx, costs[a_idx, b_idx]))
    unmatched = np.ones(u, dtype=bool)
    pairs = []
    for k in order:
        a, b = int(a_idx[k]), int(b_idx[k])
        if unmatched[a] and unmatched[b]:
            unmatched[a] = unmatched[b] = False
            pairs.append((a, b))
            if len(pairs) * 2 == u:
                break
    return canonical_pairing(pairs)
