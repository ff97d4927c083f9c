"""Forward Haar scattering transforms, free and structured.

A scattering layer replaces each pair of coefficients (a, b) by
(a + b, |a - b|).  In free mode any two coefficients of the current layer
may be paired; in structured mode the layer is viewed as a
(rows x features) array and whole rows are paired, which is what ties the
transform to a hierarchical grouping of graph vertices.

All functions here are pure and accept either a single signal of length
``dim`` or a batch of shape ``(n_samples, dim)``.  Layers are stored as
flat length-``dim`` vectors; at depth ``j`` the structured view is
``(dim / 2**j, 2**j)`` row-major, so the row/feature pair ``(n, q)`` sits
at flat index ``n * 2**j + q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NegativeInputError,
    NotPowerOfTwoError,
)

Pair = tuple[int, int]
Pairing = tuple[Pair, ...]


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def canonical_pairing(pairs) -> Pairing:
    """Return the canonical form: smaller index first, pairs sorted.

    Two semantically equal pairings canonicalize to the same tuple, which
    is what makes serialized models and learned layers reproducible.
    """
    ordered = tuple(sorted((min(a, b), max(a, b)) for a, b in pairs))
    return ordered


def validate_pairing(pairing, size: int) -> Pairing:
    """Canonicalize ``pairing`` and check it is a perfect matching of range(size)."""
    pairing = canonical_pairing(pairing)
    seen = [i for pair in pairing for i in pair]
    if len(pairing) * 2 != size or sorted(seen) != list(range(size)):
        raise DimensionMismatchError(
            f"pairing does not cover range({size}) exactly once: {pairing!r}"
        )
    return pairing


def random_pairing(size: int, rng: np.random.Generator) -> Pairing:
    """Uniformly random perfect matching of range(size)."""
    perm = rng.permutation(size)
    return canonical_pairing((int(perm[2 * i]), int(perm[2 * i + 1])) for i in range(size // 2))


def haar_pair(a: float, b: float) -> tuple[float, float]:
    """Map a coefficient pair to (sum, absolute difference).

    Invariant under swapping ``a`` and ``b``; this is the single
    permutation-invariant building block of every layer.
    """
    return a + b, abs(a - b)


def unpair(total: float, absdiff: float) -> tuple[float, float]:
    """Invert :func:`haar_pair` up to order: returns (max, min) of the pair."""
    return (total + absdiff) / 2.0, (total - absdiff) / 2.0


@dataclass(frozen=True)
class HaarNetwork:
    """A depth-J stack of pairings defining one scattering transform.

    mode
        "free": every layer pairs the ``dim`` coefficients directly.
        "structured": layer ``j`` pairs the ``dim / 2**j`` rows of the
        current (rows x features) array.
    layers
        One canonical pairing per layer, layer 0 first.

    Immutable after construction; safe to share across workers.
    """

    mode: str
    dim: int
    layers: tuple[Pairing, ...] = field(default=())

    def __post_init__(self):
        if self.mode not in ("free", "structured"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not is_power_of_two(self.dim) or self.dim < 2:
            raise NotPowerOfTwoError(f"dim must be a power of 2 and >= 2, got {self.dim}")
        if len(self.layers) > int(np.log2(self.dim)):
            raise DimensionMismatchError(
                f"depth {len(self.layers)} exceeds log2(dim) = {int(np.log2(self.dim))}"
            )
        checked = []
        for j, pairing in enumerate(self.layers):
            units = self.dim if self.mode == "free" else self.dim >> j
            checked.append(validate_pairing(pairing, units))
        object.__setattr__(self, "layers", tuple(checked))

    @property
    def depth(self) -> int:
        return len(self.layers)

    def units_at(self, j: int) -> int:
        """Number of matchable units entering layer j."""
        return self.dim if self.mode == "free" else self.dim >> j

    def coefficient_orders(self) -> list[np.ndarray]:
        """Per-layer order (number of absolute values) of each coefficient.

        In structured mode this is exactly the popcount of the feature
        index ``q``.  In free mode a sum output inherits the larger of its
        two parents' orders and a difference output adds one to it.
        """
        orders = [np.zeros(self.dim, dtype=int)]
        for j, pairing in enumerate(self.layers):
            prev = orders[-1]
            if self.mode == "free":
                cur = np.zeros(self.dim, dtype=int)
                for n, (a, b) in enumerate(pairing):
                    parent = max(prev[a], prev[b])
                    cur[2 * n] = parent
                    cur[2 * n + 1] = parent + 1
            else:
                q = np.arange(1 << (j + 1))
                per_feature = popcount(q)
                cur = np.tile(per_feature, self.dim >> (j + 1))
            orders.append(cur)
        return orders


def random_network(
    dim: int, depth: int, mode: str, rng: np.random.Generator
) -> HaarNetwork:
    """Network with uniformly random (canonical) pairings at every layer."""
    layers = []
    for j in range(depth):
        units = dim if mode == "free" else dim >> j
        layers.append(random_pairing(units, rng))
    return HaarNetwork(mode=mode, dim=dim, layers=tuple(layers))


def _pair_arrays(pairing: Pairing):
    first = np.fromiter((a for a, _ in pairing), dtype=int, count=len(pairing))
    second = np.fromiter((b for _, b in pairing), dtype=int, count=len(pairing))
    return first, second


def forward_free_layer(values: np.ndarray, pairing: Pairing) -> np.ndarray:
    """One free layer: output[2n] = a + b, output[2n+1] = |a - b| for pair n.

    ``values`` may be a vector of length d or a batch (N, d); the output
    has the same shape and satisfies ||out|| = sqrt(2) ||values||.
    """
    values = np.asarray(values, dtype=float)
    d = values.shape[-1]
    if len(pairing) * 2 != d:
        raise DimensionMismatchError(f"pairing of {len(pairing)} pairs cannot act on {d} coefficients")
    first, second = _pair_arrays(pairing)
    a = values[..., first]
    b = values[..., second]
    out = np.empty_like(values)
    out[..., 0::2] = a + b
    out[..., 1::2] = np.abs(a - b)
    return out


def forward_structured_layer(values: np.ndarray, pairing: Pairing, j: int) -> np.ndarray:
    """One structured layer at depth ``j``: pairs rows of the (rows, 2**j) view.

    out(n, 2q) = s(pair_n[0], q) + s(pair_n[1], q)
    out(n, 2q+1) = |s(pair_n[0], q) - s(pair_n[1], q)|

    Input and output are flat length-d vectors (or batches); the output is
    the flat row-major view of a (rows/2, 2**(j+1)) array.
    """
    values = np.asarray(values, dtype=float)
    d = values.shape[-1]
    width = 1 << j
    rows = d // width
    if rows * width != d or len(pairing) * 2 != rows:
        raise DimensionMismatchError(
            f"layer {j} expects {2 * len(pairing)} rows of width {width}, got flat length {d}"
        )
    grid = values.reshape(values.shape[:-1] + (rows, width))
    first, second = _pair_arrays(pairing)
    a = grid[..., first, :]
    b = grid[..., second, :]
    out = np.empty(values.shape[:-1] + (rows // 2, 2 * width), dtype=float)
    out[..., 0::2] = a + b
    out[..., 1::2] = np.abs(a - b)
    return out.reshape(values.shape)


def _check_input(network: HaarNetwork, x: np.ndarray, allow_signed: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != network.dim:
        raise DimensionMismatchError(f"signal length {x.shape[-1]} != network dim {network.dim}")
    if not allow_signed and np.any(x < 0):
        raise NegativeInputError("signal has negative entries; pass allow_signed=True to transform anyway")
    return x


def apply_layer(network: HaarNetwork, values: np.ndarray, j: int) -> np.ndarray:
    if network.mode == "free":
        return forward_free_layer(values, network.layers[j])
    return forward_structured_layer(values, network.layers[j], j)


def forward(network: HaarNetwork, x: np.ndarray, allow_signed: bool = False) -> list[np.ndarray]:
    """All scattering layers S_0 .. S_J of ``x`` (or of a batch).

    Layer j has the same flat length d as the input and 2-norm
    2**(j/2) times the input's.  Intermediate layers are retained; use
    :func:`transform` when only the deepest layer is needed.
    """
    x = _check_input(network, x, allow_signed)
    layers = [x]
    for j in range(network.depth):
        layers.append(apply_layer(network, layers[-1], j))
    return layers


def transform(network: HaarNetwork, x: np.ndarray, allow_signed: bool = False) -> np.ndarray:
    """Deepest layer S_J only, keeping a single rolling buffer."""
    values = _check_input(network, x, allow_signed)
    for j in range(network.depth):
        values = apply_layer(network, values, j)
    return values


def popcount(q) -> np.ndarray:
    """Number of set bits, vectorized over integer arrays."""
    q = np.asarray(q)
    count = np.zeros_like(q)
    while np.any(q):
        count += q & 1
        q = q >> 1
    return count


def order_of(j: int, q: int) -> int:
    """Order (number of cascaded absolute values) of feature q at depth j."""
    if not 0 <= q < (1 << j):
        raise IndexOutOfRangeError(f"feature index {q} not in [0, 2**{j})")
    return int(popcount(q))


def count_of_order(j: int, m: int, d: int) -> int:
    """How many depth-j coefficients of order m a d-dimensional transform has."""
    if not 0 <= m <= j:
        raise IndexOutOfRangeError(f"order {m} not in [0, {j}]")
    if not is_power_of_two(d) or (1 << j) > d:
        raise IndexOutOfRangeError(f"need d a power of 2 with 2**{j} <= d, got {d}")
    return comb(j, m) * (d >> j)


def sign_decomposition(
    network: HaarNetwork, x: np.ndarray, allow_signed: bool = True
) -> list[np.ndarray]:
    """Signs absorbed by the absolute values, one +/-1 vector per layer.

    Entry at each difference slot is sign(a - b) with +1 on ties; sum
    slots are +1.  Replaying the cascade linearly with these signs
    (``linear_replay``) reproduces the forward pass exactly, which is what
    exhibits S_J as an orthogonal matrix (times 2**(J/2)) applied to x.
    """
    x = _check_input(network, x, allow_signed)
    if x.ndim != 1:
        raise DimensionMismatchError("sign_decomposition takes a single signal, not a batch")
    signs = []
    values = x
    for j in range(network.depth):
        pairing = network.layers[j]
        first, second = _pair_arrays(pairing)
        layer_signs = np.ones(network.dim)
        if network.mode == "free":
            diff = values[first] - values[second]
            layer_signs[1::2] = np.where(diff < 0, -1.0, 1.0)
        else:
            width = 1 << j
            grid = values.reshape(-1, width)
            diff = grid[first, :] - grid[second, :]
            sign_grid = np.ones((len(pairing), 2 * width))
            sign_grid[:, 1::2] = np.where(diff < 0, -1.0, 1.0)
            layer_signs = sign_grid.reshape(-1)
        signs.append(layer_signs)
        values = apply_layer(network, values, j)
    return signs


def linear_replay(
    network: HaarNetwork, x: np.ndarray, signs: list[np.ndarray]
) -> list[np.ndarray]:
    """Run the cascade with recorded signs instead of absolute values.

    Linear in ``x``; with signs from :func:`sign_decomposition` of the same
    signal the output layers equal :func:`forward`'s.  ``x`` may be a batch,
    which is how the full transform matrix is materialized.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != network.dim:
        raise DimensionMismatchError(f"signal length {x.shape[-1]} != network dim {network.dim}")
    layers = [x]
    values = x
    for j in range(network.depth):
        pairing = network.layers[j]
        first, second = _pair_arrays(pairing)
        if network.mode == "free":
            a = values[..., first]
            b = values[..., second]
            out = np.empty_like(values)
            out[..., 0::2] = a + b
            out[..., 1::2] = (a - b) * signs[j][1::2]
        else:
            width = 1 << j
            grid = values.reshape(values.shape[:-1] + (-1, width))
            a = grid[..., first, :]
            b = grid[..., second, :]
            out = np.empty(values.shape[:-1] + (len(pairing), 2 * width), dtype=float)
            out[..., 0::2] = a + b
            out[..., 1::2] = (a - b) * signs[j].reshape(-1, 2 * width)[:, 1::2]
            out = out.reshape(values.shape)
        layers.append(out)
        values = out
    return layers


def transform_matrix(network: HaarNetwork, x: np.ndarray) -> np.ndarray:
    """The d x d matrix M with S_J x = M x for this signal's sign pattern.

    M / 2**(J/2) is orthogonal: MM^T = 2**J I.
    """
    signs = sign_decomposition(network, x)
    basis = np.eye(network.dim)
    replayed = linear_replay(network, basis, signs)
    return replayed[-1].T
