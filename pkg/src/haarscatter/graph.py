"""Dyadic vertex partitions, Haar wavelets on graphs, and diagnostics.

A structured network's row pairings induce a hierarchy of vertex sets:
level-0 sets are singletons and each level-(j+1) set is the union of the
two level-j sets its pairing merged.  Haar wavelets on the graph are
differences of indicators of merged sets; together with the top-level
indicators they form an orthogonal basis of R^d.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import HaarNetwork, forward, order_of, sign_decomposition
from .errors import (
    InadmissibleIndexError,
    InconsistentPartitionError,
    IndexOutOfRangeError,
    WrongModeError,
)

VertexSet = tuple[int, ...]


@dataclass(frozen=True)
class DyadicPartition:
    """Vertex sets per level; ``levels[j][n]`` lists 2**j vertices.

    Vertex order inside each set is the depth-first order of the merge
    tree (first-listed pairing branch first), which fixes the column order
    of the Hadamard decomposition.
    """

    levels: tuple[tuple[VertexSet, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.levels[0])

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def build_partition(network: HaarNetwork) -> DyadicPartition:
    """Merge vertex sets level by level following the row pairings."""
    if network.mode != "structured":
        raise WrongModeError("partitions are defined by structured networks only")
    levels: list[tuple[VertexSet, ...]] = [tuple((v,) for v in range(network.dim))]
    for pairing in network.layers:
        prev = levels[-1]
        levels.append(tuple(prev[a] + prev[b] for a, b in pairing))
    return DyadicPartition(levels=tuple(levels))


@dataclass(frozen=True)
class HaarWaveletBasis:
    """Indicators of the deepest sets plus one wavelet per merge.

    ``wavelets[j]`` holds the level-(j+1) wavelets as rows: +1 on the
    first merged set, -1 on the second.  All d vectors are pairwise
    orthogonal; squared norms equal the set sizes.
    """

    scaling: np.ndarray                 # (#top sets, d) indicator rows
    wavelets: tuple[np.ndarray, ...]    # entry j: (#level-(j+1) sets, d)

    def all_vectors(self) -> np.ndarray:
        return np.vstack([self.scaling, *self.wavelets]) if self.wavelets else self.scaling.copy()


def _indicator(vertices: VertexSet, dim: int) -> np.ndarray:
    row = np.zeros(dim)
    row[list(vertices)] = 1.0
    return row


def wavelet_basis(partition: DyadicPartition, network: HaarNetwork) -> HaarWaveletBasis:
    """Orthogonal Haar basis attached to a partition and its pairings."""
    if network.mode != "structured":
        raise WrongModeError("wavelet bases are defined by structured networks only")
    if partition.depth != network.depth or partition.dim != network.dim:
        raise InconsistentPartitionError("partition and network disagree on dim or depth")
    dim = partition.dim
    wavelet_levels = []
    for j, pairing in enumerate(network.layers):
        prev = partition.levels[j]
        expected = tuple(prev[a] + prev[b] for a, b in pairing)
        if expected != partition.levels[j + 1]:
            raise InconsistentPartitionError(f"level {j + 1} sets do not match the layer pairing")
        rows = np.stack(
            [_indicator(prev[a], dim) - _indicator(prev[b], dim) for a, b in pairing]
        )
        wavelet_levels.append(rows)
    scaling = np.stack([_indicator(s, dim) for s in partition.levels[-1]])
    return HaarWaveletBasis(scaling=scaling, wavelets=tuple(wavelet_levels))


def _descendants(partition: DyadicPartition, coarse_level: int, fine_level: int) -> list[list[int]]:
    """For each coarse set, the indices of fine-level sets contained in it."""
    fine_of_vertex = {}
    for p, vertices in enumerate(partition.levels[fine_level]):
        for v in vertices:
            fine_of_vertex[v] = p
    out = []
    for vertices in partition.levels[coarse_level]:
        inside = sorted({fine_of_vertex[v] for v in vertices})
        out.append(inside)
    return out


def decode_feature_scales(j: int, q: int) -> list[int]:
    """Scales j_1 < ... < j_m <= j with q = sum_k 2**(j - j_k)."""
    if not 0 <= q < (1 << j):
        raise IndexOutOfRangeError(f"feature index {q} not in [0, 2**{j})")
    return [j - bit for bit in range(j) if (q >> bit) & 1][::-1]


def verify_wavelet_identity(
    network: HaarNetwork,
    x: np.ndarray,
    j: int,
    q: int,
    next_scale: int,
    allow_signed: bool = False,
) -> float:
    """Max discrepancy of the order-raising wavelet identity at (j, q, next_scale).

    The depth-j coefficients at feature ``q + 2**(j - next_scale)`` (one
    more absolute value than ``q``) are recomputed as sums of absolute
    Haar wavelet coefficients, at scale ``next_scale``, of the order-m
    coefficient field spread back onto the vertices; the largest absolute
    difference over rows is returned.  Exact up to roundoff.

    Each coefficient is spread as the average over its vertex set (value
    divided by the set size); with plain indicator spreading every inner
    product would pick up a spurious factor of that size.
    """
    if network.mode != "structured":
        raise WrongModeError("the wavelet identity concerns structured networks")
    if not 1 <= j <= network.depth:
        raise InadmissibleIndexError(f"layer {j} not in [1, {network.depth}]")
    scales = decode_feature_scales(j, q)
    deepest = scales[-1] if scales else 0
    if not deepest < next_scale <= j:
        raise InadmissibleIndexError(
            f"need max existing scale {deepest} < next_scale <= {j}, got {next_scale}"
        )
    m_level = deepest                      # layer where the order-m field lives
    q_at_m = q >> (j - m_level)            # same scales, re-indexed at that layer
    layers = forward(network, x, allow_signed=allow_signed)
    partition = build_partition(network)

    width_m = 1 << m_level
    field = layers[m_level].reshape(-1, width_m)[:, q_at_m]
    spread = np.zeros(network.dim)
    for n, vertices in enumerate(partition.levels[m_level]):
        spread[list(vertices)] = field[n] / len(vertices)

    basis_rows = []
    for p, (a, b) in enumerate(network.layers[next_scale - 1]):
        prev = partition.levels[next_scale - 1]
        basis_rows.append(_indicator(prev[a], network.dim) - _indicator(prev[b], network.dim))
    wavelet_coeffs = np.abs(np.array(basis_rows) @ spread)

    q_target = q + (1 << (j - next_scale))
    width_j = 1 << j
    lhs = layers[j].reshape(-1, width_j)[:, q_target]
    contained = _descendants(partition, j, next_scale)
    rhs = np.array([wavelet_coeffs[inside].sum() for inside in contained])
    return float(np.abs(lhs - rhs).max())


def admissible_identity_indices(depth: int) -> list[tuple[int, int, int]]:
    """All (j, q, next_scale) triples the wavelet identity applies to.

    Every depth-j feature of order >= 1 arises exactly once as
    q + 2**(j - next_scale) with next_scale deeper than all of q's scales.
    """
    triples = []
    for j in range(1, depth + 1):
        for q_target in range(1, 1 << j):
            low_bit = (q_target & -q_target).bit_length() - 1
            next_scale = j - low_bit
            q = q_target - (1 << low_bit)
            triples.append((j, q, next_scale))
    return triples


def hadamard_of_output(network: HaarNetwork, x: np.ndarray, n: int) -> np.ndarray:
    """Sign matrix M with S_J x(n, .) = M @ x[V] for output row n.

    Columns follow the depth-first vertex order of the row's merge tree;
    all entries are +/-1 and M M^T = 2**J I.
    """
    if network.mode != "structured":
        raise WrongModeError("the sign-matrix decomposition concerns structured networks")
    n_rows = network.dim >> network.depth
    if not 0 <= n < n_rows:
        raise IndexOutOfRangeError(f"row {n} not in [0, {n_rows})")
    signs = sign_decomposition(network, x)

    def build(level: int, row: int) -> np.ndarray:
        if level == 0:
            return np.ones((1, 1))
        a, b = network.layers[level - 1][row]
        left = build(level - 1, a)
        right = build(level - 1, b)
        width = 1 << level
        sign_row = signs[level - 1].reshape(-1, width)[row, 1::2]
        out = np.empty((width, width))
        out[0::2, : width // 2] = left
        out[0::2, width // 2 :] = right
        out[1::2, : width // 2] = left * sign_row[:, None]
        out[1::2, width // 2 :] = -right * sign_row[:, None]
        return out

    return build(network.depth, n)


@dataclass(frozen=True)
class ReferenceGraph:
    """Undirected simple graph on vertices 0..dim-1, as adjacency sets."""

    dim: int
    neighbors: tuple[frozenset, ...]

    @classmethod
    def from_edges(cls, dim: int, edges) -> "ReferenceGraph":
        adj = [set() for _ in range(dim)]
        for u, v in edges:
            if u == v:
                continue
            adj[u].add(v)
            adj[v].add(u)
        return cls(dim=dim, neighbors=tuple(frozenset(s) for s in adj))

    @classmethod
    def ring(cls, dim: int) -> "ReferenceGraph":
        return cls.from_edges(dim, [(v, (v + 1) % dim) for v in range(dim)])

    @classmethod
    def grid8(cls, height: int, width: int) -> "ReferenceGraph":
        """Pixel grid, 8-neighbor connectivity, raster vertex order."""
        edges = []
        for r in range(height):
            for c in range(width):
                for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < height and 0 <= cc < width:
                        edges.append((r * width + c, rr * width + cc))
        return cls.from_edges(height * width, edges)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]

    def is_connected_subset(self, vertices) -> bool:
        """BFS connectivity of the induced subgraph."""
        vset = set(vertices)
        if len(vset) <= 1:
            return True
        start = next(iter(vset))
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u] & vset:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(vset)


def load_edge_list(path) -> list[tuple[int, int]]:
    """Edge-list text file: one 0-indexed "u v" pair per line; # comments."""
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
    return edges


def connectivity_fraction(
    partition: DyadicPartition,
    graph: ReferenceGraph,
    level: int,
    mask=None,
    mode: str = "induced",
) -> float:
    """Fraction of level-``level`` sets that are connected in ``graph``.

    mask
        Optional vertex subset (e.g. active pixels); sets are intersected
        with it first and empty intersections are not counted.
    mode
        "induced": BFS connectivity of the (masked) induced subgraph.
        "mergewise": only requires one cross edge between the two masked
        subsets the pairing merged, the recursion's own criterion.
    """
    if not 0 <= level <= partition.depth:
        raise IndexOutOfRangeError(f"level {level} not in [0, {partition.depth}]")
    mask_set = None if mask is None else set(int(v) for v in mask)

    def masked(vertices) -> set:
        vs = set(vertices)
        return vs if mask_set is None else vs & mask_set

    total = 0
    connected = 0
    for n, vertices in enumerate(partition.levels[level]):
        inside = masked(vertices)
        if not inside:
            continue
        total += 1
        if mode == "induced":
            ok = graph.is_connected_subset(inside)
        elif mode == "mergewise":
            if level == 0:
                ok = True
            else:
                half = len(vertices) // 2
                left = masked(vertices[:half])
                right = masked(vertices[half:])
                if not left or not right:
                    ok = True
                else:
                    ok = any(graph.has_edge(u, v) for u in left for v in right)
        else:
            raise ValueError(f"unknown connectivity mode {mode!r}")
        connected += ok
    return connected / total if total else 1.0
