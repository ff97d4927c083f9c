"""Inverting scattering layers from pairs of interlaced pairings.

One layer's output determines every paired value set but not the order
within pairs.  Two pairings whose union graph is connected ("interlaced")
pin the order down: walking the union cycle propagates each assignment to
the next vertex, and only genuinely two-valued alternating signals leave
two consistent assignments.  A full depth-J free cascade is inverted from
the 2**J transforms indexed by which of the two pairings each layer used.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .core import Pairing, canonical_pairing, forward_free_layer, unpair, validate_pairing
from .errors import (
    AmbiguousReconstructionError,
    DimensionMismatchError,
    InconsistentInputsError,
    NotInterlacedError,
    TooSmallError,
)


def check_interlaced(p0: Pairing, p1: Pairing) -> bool:
    """True iff no strict index subset is closed under both pairings.

    Equivalent to connectivity of the union graph of both edge sets, which
    is what the propagation-based inverter needs.
    """
    if len(p0) != len(p1):
        raise DimensionMismatchError("pairings cover different index sets")
    if canonical_pairing(p0) == canonical_pairing(p1):
        # Identical pairings add no ordering information, whatever the size.
        return False
    size = 2 * len(p0)
    parent = list(range(size))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in (*p0, *p1):
        parent[find(a)] = find(b)
    return len({find(v) for v in range(size)}) == 1


@dataclass(frozen=True)
class InterlacedPairingSet:
    """Two pairings of the same index set with no common invariant subset."""

    p0: Pairing
    p1: Pairing

    def __post_init__(self):
        size = 2 * len(self.p0)
        object.__setattr__(self, "p0", validate_pairing(self.p0, size))
        object.__setattr__(self, "p1", validate_pairing(self.p1, size))
        if not check_interlaced(self.p0, self.p1):
            raise NotInterlacedError("pairings share a closed strict subset")

    @property
    def dim(self) -> int:
        return 2 * len(self.p0)


def make_interlaced(dim: int) -> InterlacedPairingSet:
    """Adjacent pairs and their one-step ring shift; interlaced for any even dim >= 4."""
    if dim < 4 or dim % 2 != 0:
        raise TooSmallError(f"interlacing needs an even dim >= 4, got {dim}")
    p0 = tuple((2 * n, 2 * n + 1) for n in range(dim // 2))
    p1 = tuple((2 * n + 1, (2 * n + 2) % dim) for n in range(dim // 2))
    return InterlacedPairingSet(p0=p0, p1=p1)


def _edge_values(output: np.ndarray, pairing: Pairing) -> dict:
    """Map each pair to its (sum, high, low) read off one layer output."""
    values = {}
    for n, (a, b) in enumerate(pairing):
        total, absdiff = float(output[2 * n]), float(output[2 * n + 1])
        hi, lo = unpair(total, absdiff)
        values[(a, b)] = (total, hi, lo)
    return values


def _layer_solutions(
    s0: np.ndarray, s1: np.ndarray, pairings: InterlacedPairingSet, tol: float
) -> list[np.ndarray]:
    """All signals consistent with both layer outputs (at most two).

    Starts from vertex 0, tries both orders of its first pair, and
    propagates x(v) = sum - x(u) along the connected union graph, checking
    each edge's value set on the way.
    """
    edges = {}
    for pair, vals in _edge_values(s0, pairings.p0).items():
        edges.setdefault(pair[0], []).append((pair[1], vals))
        edges.setdefault(pair[1], []).append((pair[0], vals))
    for pair, vals in _edge_values(s1, pairings.p1).items():
        edges.setdefault(pair[0], []).append((pair[1], vals))
        edges.setdefault(pair[1], []).append((pair[0], vals))

    dim = pairings.dim
    start_vals = edges[0][0][1]
    candidates = [start_vals[1]]
    if abs(start_vals[1] - start_vals[2]) > tol:
        candidates.append(start_vals[2])

    solutions = []
    for x0 in candidates:
        x = np.full(dim, np.nan)
        x[0] = x0
        stack = [0]
        ok = True
        while stack and ok:
            u = stack.pop()
            for v, (total, hi, lo) in edges[u]:
                implied = total - x[u]
                if min(abs(x[u] - hi), abs(x[u] - lo)) > tol:
                    ok = False
                    break
                if np.isnan(x[v]):
                    x[v] = implied
                    stack.append(v)
                elif abs(x[v] - implied) > tol:
                    ok = False
                    break
        if ok and not np.isnan(x).any():
            solutions.append(x)
    return solutions


def _default_tol(s0: np.ndarray, s1: np.ndarray) -> float:
    scale = max(1.0, float(np.abs(s0).max()), float(np.abs(s1).max()))
    return 1e-9 * scale


def invert_layer(
    s0: np.ndarray,
    s1: np.ndarray,
    pairings: InterlacedPairingSet,
    tol: float | None = None,
) -> np.ndarray:
    """Recover x from one layer computed twice, once per interlaced pairing.

    Exactly one consistent assignment is returned; two raise
    AmbiguousReconstructionError (the two-valued alternating case of the
    inversion lemma), none raise InconsistentInputsError.
    """
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    dim = pairings.dim
    if s0.shape != (dim,) or s1.shape != (dim,):
        raise DimensionMismatchError("layer outputs do not match the pairing dimension")
    if tol is None:
        tol = _default_tol(s0, s1)
    solutions = _layer_solutions(s0, s1, pairings, tol)
    if not solutions:
        raise InconsistentInputsError("no signal is consistent with both transforms")
    if len(solutions) == 2 and np.abs(solutions[0] - solutions[1]).max() > tol:
        raise AmbiguousReconstructionError(
            "two-valued alternating signal: both orders are consistent"
        )
    return solutions[0]


@dataclass(frozen=True)
class TransformBag:
    """All 2**J depth-J outputs of one signal, keyed by per-layer pairing choices."""

    dim: int
    layer_pairs: tuple[InterlacedPairingSet, ...]
    outputs: dict

    @property
    def depth(self) -> int:
        return len(self.layer_pairs)


def forward_bag(x: np.ndarray, layer_pairs) -> TransformBag:
    """Compute the free cascade under every combination of layer pairings."""
    x = np.asarray(x, dtype=float)
    layer_pairs = tuple(layer_pairs)
    for pairs in layer_pairs:
        if pairs.dim != x.shape[-1]:
            raise DimensionMismatchError("interlaced pairing dim != signal length")
    outputs = {}
    for choice in product((0, 1), repeat=len(layer_pairs)):
        values = x
        for bit, pairs in zip(choice, layer_pairs):
            values = forward_free_layer(values, pairs.p1 if bit else pairs.p0)
        outputs[choice] = values
    return TransformBag(dim=x.shape[-1], layer_pairs=layer_pairs, outputs=outputs)


_MAX_BRANCHES = 16


def _feasible_layer(vec: np.ndarray, level: int, tol: float) -> bool:
    """Could ``vec`` be a depth-``level`` layer of some nonnegative signal?

    Layers of nonnegative signals have nonnegative entries and, for
    level >= 1, every difference slot bounded by its sum slot.
    """
    if np.min(vec) < -tol:
        return False
    if level >= 1 and np.max(vec[1::2] - vec[0::2]) > tol:
        return False
    return True


def _dedupe(vectors: list[np.ndarray], tol: float) -> list[np.ndarray]:
    unique: list[np.ndarray] = []
    for vec in vectors:
        if not any(np.abs(vec - u).max() <= tol for u in unique):
            unique.append(vec)
    return unique


def reconstruct(
    bag: TransformBag, tol: float | None = None, require_nonnegative: bool = True
) -> np.ndarray:
    """Invert a transform bag level by level back to the input signal.

    Layer inversions that admit two orders (two-valued alternating
    configurations) are branched and pruned against the other transforms
    and, by default, against nonnegativity of every intermediate layer --
    the transform's input domain.  A surviving unique signal is returned;
    several raise AmbiguousReconstructionError, none
    InconsistentInputsError.  Signals in generic position (every
    intermediate layer taking more than two values) never branch.
    """
    if tol is None:
        tol = max(_default_tol(out, out) for out in bag.outputs.values())

    def solve(prefix: tuple, level: int) -> list[np.ndarray]:
        if level == bag.depth:
            return [np.asarray(bag.outputs[prefix], dtype=float)]
        pairs = bag.layer_pairs[level]
        left = solve(prefix + (0,), level + 1)
        right = solve(prefix + (1,), level + 1)
        branches: list[np.ndarray] = []
        for s0 in left:
            for s1 in right:
                for sol in _layer_solutions(s0, s1, pairs, tol):
                    if require_nonnegative and not _feasible_layer(sol, level, tol):
                        continue
                    branches.append(sol)
        branches = _dedupe(branches, tol)
        if len(branches) > _MAX_BRANCHES:
            raise AmbiguousReconstructionError(
                f"more than {_MAX_BRANCHES} consistent branches at level {level}"
            )
        return branches

    candidates = solve((), 0)
    if not candidates:
        raise InconsistentInputsError("no signal is consistent with the transform bag")
    if len(candidates) > 1:
        raise AmbiguousReconstructionError(
            f"{len(candidates)} signals are consistent with the transform bag"
        )
    return candidates[0]
