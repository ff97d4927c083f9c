"""Unsupervised pairing optimization and transform bagging.

Each layer's pairing is chosen to maximize the variance of the next layer
over a training batch, which reduces to a minimum-weight perfect matching
problem: the l1 cost of pairing units (a, b) is the summed absolute
variation between them across the batch, the mixed cost additionally
squares the per-coefficient batch sums.  Layers are optimized greedily,
shallow to deep, with no backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import HaarNetwork, Pairing, apply_layer
from .errors import EmptyBatchError, ShapeMismatchError, TooFewSamplesError
from .matching import match_exact, match_greedy


@dataclass(frozen=True)
class TrainConfig:
    depth: int
    mode: str = "structured"
    norm: str = "l1"            # "l1" | "mixed"
    matcher: str = "exact"      # "exact" | "greedy"
    seed: int = 0
    allow_signed: bool = False

    def __post_init__(self):
        if self.norm not in ("l1", "mixed"):
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.matcher not in ("exact", "greedy"):
            raise ValueError(f"unknown matcher {self.matcher!r}")
        if self.mode not in ("free", "structured"):
            raise ValueError(f"unknown mode {self.mode!r}")


def _batch_views(layers: np.ndarray, mode: str, j: int) -> np.ndarray:
    """Batch as (n_samples, units, width): width 1 in free mode, 2**j structured."""
    layers = np.asarray(layers, dtype=float)
    if layers.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-d batch, got shape {layers.shape}")
    if layers.shape[0] == 0:
        raise EmptyBatchError("cost matrices need at least one sample")
    n, d = layers.shape
    if mode == "free":
        return layers.reshape(n, d, 1)
    width = 1 << j
    if d % width != 0:
        raise ShapeMismatchError(f"flat length {d} not divisible by width {width}")
    return layers.reshape(n, d // width, width)


def cost_l1(layers: np.ndarray, mode: str = "free", j: int = 0) -> np.ndarray:
    """Total-variation pairing cost: cost(a, b) = sum_i sum_q |s_i(a,q) - s_i(b,q)|.

    ``layers`` is a batch of flat depth-j outputs, shape (n_samples, d).
    Minimizing the matched total regroups units with close values.
    """
    s = _batch_views(layers, mode, j)
    u = s.shape[1]
    costs = np.zeros((u, u))
    # One slice per unit keeps peak memory at O(n_samples * u * width).
    for a in range(u - 1):
        block = np.abs(s[:, a + 1 :, :] - s[:, a : a + 1, :]).sum(axis=(0, 2))
        costs[a, a + 1 :] = block
        costs[a + 1 :, a] = block
    return costs


def cost_mixed(layers: np.ndarray, mode: str = "free", j: int = 0) -> np.ndarray:
    """Mixed l1/l2 pairing cost.

    Per output coefficient of the candidate pair, the batch sum of absolute
    values is squared; sums and absolute differences contribute
    (sum_i (s_i(a,q) + s_i(b,q)))**2 + (sum_i |s_i(a,q) - s_i(b,q)|)**2.
    Assumes nonnegative layer values, under which |a + b| = a + b.
    """
    s = _batch_views(layers, mode, j)
    u = s.shape[1]
    col_sums = s.sum(axis=0)                      # (u, width)
    costs = np.zeros((u, u))
    for a in range(u - 1):
        sum_part = (col_sums[a + 1 :, :] + col_sums[a : a + 1, :]) ** 2
        diff_part = np.abs(s[:, a + 1 :, :] - s[:, a : a + 1, :]).sum(axis=0) ** 2
        block = (sum_part + diff_part).sum(axis=1)
        costs[a, a + 1 :] = block
        costs[a + 1 :, a] = block
    return costs


def empirical_variance(layers: np.ndarray) -> float:
    """Non-normalized batch variance: sum_i ||s_i||^2 - ||sum_i s_i||^2."""
    layers = np.asarray(layers, dtype=float)
    if layers.ndim != 2 or layers.shape[0] == 0:
        raise EmptyBatchError("variance needs a nonempty 2-d batch")
    total = layers.sum(axis=0)
    return float((layers**2).sum() - (total**2).sum())


def layer_cost_matrix(batch_layer: np.ndarray, cfg: TrainConfig, j: int) -> np.ndarray:
    if cfg.norm == "l1":
        return cost_l1(batch_layer, cfg.mode, j)
    return cost_mixed(batch_layer, cfg.mode, j)


def _solve(costs: np.ndarray, cfg: TrainConfig) -> Pairing:
    return match_exact(costs) if cfg.matcher == "exact" else match_greedy(costs)


def train_layerwise(batch: np.ndarray, cfg: TrainConfig) -> HaarNetwork:
    """Learn one network's pairings, shallow layer to deep, on a batch.

    Each layer's cost matrix is built from the batch transformed by the
    pairings already fixed; the matching that minimizes it becomes that
    layer's pairing.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise EmptyBatchError("training needs a nonempty 2-d batch")
    dim = batch.shape[1]
    network = HaarNetwork(mode=cfg.mode, dim=dim, layers=())
    values = batch
    layers: list[Pairing] = []
    for j in range(cfg.depth):
        costs = layer_cost_matrix(values, cfg, j)
        pairing = _solve(costs, cfg)
        layers.append(pairing)
        network = HaarNetwork(mode=cfg.mode, dim=dim, layers=tuple(layers))
        values = apply_layer(network, values, j)
    return network


@dataclass(frozen=True)
class BaggedModel:
    """T independently trained transforms plus the subset split that made them."""

    transforms: tuple[HaarNetwork, ...]
    subset_assignment: tuple[int, ...]
    config: TrainConfig

    @classmethod
    def from_networks(cls, networks, config: TrainConfig) -> "BaggedModel":
        """Wrap externally constructed transforms (e.g. known-geometry grids)."""
        return cls(transforms=tuple(networks), subset_assignment=(), config=config)

    @property
    def dim(self) -> int:
        return self.transforms[0].dim


def split_subsets(n_samples: int, n_subsets: int, seed: int) -> np.ndarray:
    """Seeded shuffle, then contiguous near-equal chunks (remainder round-robin).

    Returns the subset id of each sample; subsets are disjoint and cover
    the batch.
    """
    if n_samples < n_subsets:
        raise TooFewSamplesError(f"{n_samples} samples cannot fill {n_subsets} subsets")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_samples)
    base, rem = divmod(n_samples, n_subsets)
    sizes = [base + (1 if t < rem else 0) for t in range(n_subsets)]
    assignment = np.empty(n_samples, dtype=int)
    start = 0
    for t, size in enumerate(sizes):
        assignment[order[start : start + size]] = t
        start += size
    return assignment


def train_bagged(batch: np.ndarray, n_transforms: int, cfg: TrainConfig) -> BaggedModel:
    """Split the batch into disjoint subsets and train one network per subset."""
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise EmptyBatchError("training needs a nonempty 2-d batch")
    assignment = split_subsets(batch.shape[0], n_transforms, cfg.seed)
    networks = []
    for t in range(n_transforms):
        networks.append(train_layerwise(batch[assignment == t], cfg))
    return BaggedModel(
        transforms=tuple(networks),
        subset_assignment=tuple(int(t) for t in assignment),
        config=cfg,
    )
