"""Structured pairing schedules for images on a known pixel grid.

Neighbor pixels are paired alternately along rows and columns as depth
grows, so even levels group square pixel blocks.  Cyclic shifts of the
block lattice and a diagonal (45-degree) variant of the first two levels
generate the family of known-geometry transforms that gets bagged.
"""

from __future__ import annotations

import numpy as np

from .core import HaarNetwork, Pairing, canonical_pairing, is_power_of_two
from .errors import DimensionMismatchError, NotPowerOfTwoError


def _merge_directions(height: int, width: int, depth: int) -> list[str]:
    """Alternate horizontal/vertical merges, horizontal first, capped per side."""
    log_h = int(np.log2(height))
    log_w = int(np.log2(width))
    if depth > log_h + log_w:
        raise DimensionMismatchError(f"depth {depth} exceeds log2({height * width})")
    used_h = used_w = 0
    directions = []
    for level in range(1, depth + 1):
        prefer_w = level % 2 == 1
        if prefer_w and used_w < log_w or used_h == log_h:
            directions.append("w")
            used_w += 1
        else:
            directions.append("h")
            used_h += 1
    return directions


def _set_ids(
    height: int, width: int, level: int, directions: list[str], shift: tuple[int, int], orientation: str
) -> np.ndarray:
    """Level-``level`` merge-set id of every pixel (raster order)."""
    rows, cols = np.divmod(np.arange(height * width), width)
    rows = (rows + shift[0]) % height
    cols = (cols + shift[1]) % width
    block_h = 2 ** directions[:level].count("h")
    block_w = 2 ** directions[:level].count("w")
    base = (rows // block_h) * (width // block_w) + cols // block_w
    if orientation == "diagonal" and level == 1:
        if directions[0] != "w" or (len(directions) > 1 and directions[1] != "h"):
            raise DimensionMismatchError("diagonal orientation needs both grid directions available")
        # Split each (future) 2x2 block into its two diagonal dominoes.
        block = (rows // 2) * (width // 2) + cols // 2
        return block * 2 + (rows + cols) % 2
    return base


def grid_pairings(
    height: int,
    width: int,
    depth: int,
    shift: tuple[int, int] = (0, 0),
    orientation: str = "axis",
) -> tuple[Pairing, ...]:
    """Deterministic structured pairing schedule for an image grid.

    Returns one row pairing per level, expressed in the canonical row
    order that the structured forward pass maintains.  ``shift`` slides
    the block lattice cyclically; ``orientation`` "diagonal" pairs the
    first level along 45-degree dominoes instead of row neighbors.
    """
    if not (is_power_of_two(height) and is_power_of_two(width)):
        raise NotPowerOfTwoError(f"grid sides must be powers of two, got {height}x{width}")
    if orientation not in ("axis", "diagonal"):
        raise ValueError(f"unknown orientation {orientation!r}")
    directions = _merge_directions(height, width, depth)
    dim = height * width
    row_sets: list[tuple[int, ...]] = [(v,) for v in range(dim)]
    layers: list[Pairing] = []
    for level in range(1, depth + 1):
        ids = _set_ids(height, width, level, directions, shift, orientation)
        groups: dict[int, list[int]] = {}
        for row_idx, vertices in enumerate(row_sets):
            gid = int(ids[vertices[0]])
            if any(ids[v] != gid for v in vertices[1:]):
                raise DimensionMismatchError("merge sets straddle the previous level's sets")
            groups.setdefault(gid, []).append(row_idx)
        pairs = []
        for gid in sorted(groups):
            members = groups[gid]
            if len(members) != 2:
                raise DimensionMismatchError(f"level {level} merge set has {len(members)} members")
            pairs.append((members[0], members[1]))
        pairing = canonical_pairing(pairs)
        layers.append(pairing)
        row_sets = [row_sets[a] + row_sets[b] for a, b in pairing]
    return tuple(layers)


def grid_network(
    height: int,
    width: int,
    depth: int,
    shift: tuple[int, int] = (0, 0),
    orientation: str = "axis",
) -> HaarNetwork:
    layers = grid_pairings(height, width, depth, shift=shift, orientation=orientation)
    return HaarNetwork(mode="structured", dim=height * width, layers=layers)


def grid_pairing_variants(height: int, width: int, depth: int, count: int) -> list[HaarNetwork]:
    """The first ``count`` of the 32 (shift, orientation) transform variants.

    Enumeration order alternates axis/diagonal while stepping through the
    4x4 shift lattice, so small counts already mix orientations and shifts.
    """
    if count > 32:
        raise ValueError("at most 32 grid variants are enumerated (4x4 shifts x 2 orientations)")
    variants = []
    for k in range(count):
        orientation = "axis" if k % 2 == 0 else "diagonal"
        shift_idx = k // 2
        shift = (shift_idx // 4, shift_idx % 4)
        variants.append(grid_network(height, width, depth, shift=shift, orientation=orientation))
    return variants
