"""Circular stationary Gaussian processes and pairing-recovery experiments.

Signals live on a ring of ``dim`` points; their covariance depends only on
the circular distance, so the covariance matrix is circulant and sampling
is done spectrally.  The recovery experiments ask how many samples the
total-variation pairing objective needs before the minimizing matching
pairs only ring neighbors, and compare against the concentration bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBatchError, InvalidModelError, ZeroGapError
from .learn import cost_l1
from .matching import match_exact

# Constant of the Gaussian concentration inequality backing the sample-size
# bound; exposed for documentation only, the bound formula absorbs it.
CONCENTRATION_CONSTANT = 2.0 / math.pi**2

_PSD_TOL = 1e-9


@dataclass(frozen=True)
class RingModel:
    """Stationary Gaussian process on a ring.

    ``correlations[u]`` is the covariance of points at circular distance u;
    it must be symmetric (corr[u] == corr[dim-u]) and its DFT must be
    nonnegative for the covariance to be positive semidefinite.
    """

    dim: int
    correlations: np.ndarray

    def __post_init__(self):
        corr = np.asarray(self.correlations, dtype=float)
        if corr.shape != (self.dim,):
            raise InvalidModelError(f"need {self.dim} correlation lags, got shape {corr.shape}")
        if corr[0] <= 0:
            raise InvalidModelError("zero-lag correlation must be positive")
        if not np.allclose(corr, np.roll(corr[::-1], 1), atol=1e-12):
            raise InvalidModelError("correlations must satisfy corr[u] == corr[dim - u]")
        spectrum = np.fft.rfft(corr).real
        if spectrum.min() < -_PSD_TOL * max(1.0, corr[0]):
            raise InvalidModelError(
                f"covariance not PSD: min DFT coefficient {spectrum.min():.3e}"
            )
        object.__setattr__(self, "correlations", corr)

    def spectrum(self) -> np.ndarray:
        """Real half-spectrum (rfft) of the correlation sequence, clipped at 0."""
        return np.clip(np.fft.rfft(self.correlations).real, 0.0, None)

    def covariance(self) -> np.ndarray:
        """Dense circulant covariance matrix."""
        idx = np.arange(self.dim)
        return self.correlations[(idx[:, None] - idx[None, :]) % self.dim]

    def operator_norm(self) -> float:
        return float(self.spectrum().max())


def ring_model(dim: int, neighbor: float = 0.44, far: float = 0.06) -> RingModel:
    """Default experiment family: unit variance, one strong neighbor lag.

    corr(0) = 1, corr(1) = neighbor, corr(u) = far elsewhere.  Projected to
    the PSD cone by clipping negative DFT coefficients (a no-op for the
    default ratios).
    """
    if dim < 4 or dim % 2 != 0:
        raise InvalidModelError(f"ring experiments need an even dim >= 4, got {dim}")
    corr = np.full(dim, far)
    corr[0] = 1.0
    corr[1] = corr[-1] = neighbor
    spectrum = np.fft.rfft(corr).real
    if spectrum.min() < 0:
        corr = np.fft.irfft(np.clip(spectrum, 0.0, None), n=dim)
        corr = corr / corr[0]
    return RingModel(dim=dim, correlations=corr)


def sample(model: RingModel, n_samples: int, seed) -> np.ndarray:
    """Spectral sampler: filter white noise by the square root of the spectrum.

    Returns an (n_samples, dim) batch with exact covariance equal to the
    model's circulant matrix; deterministic per seed.
    """
    if n_samples < 1:
        raise EmptyBatchError("need at least one sample")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, model.dim))
    gain = np.sqrt(model.spectrum())
    return np.fft.irfft(np.fft.rfft(noise, axis=1) * gain, n=model.dim, axis=1)


def correlation_gap(model: RingModel) -> float:
    """Squared difference of root-variations between far and neighbor lags.

    Positive when neighbors correlate strictly stronger than any lag >= 2;
    it controls how many samples total-variation pairing needs.
    """
    corr = model.correlations
    if model.dim < 4:
        raise InvalidModelError("gap needs dim >= 4")
    r_neighbor = corr[1] / corr[0]
    r_far = float(corr[2 : model.dim // 2 + 1].max()) / corr[0]
    if r_neighbor > 1 or r_far > 1:
        raise InvalidModelError("correlations exceed the zero-lag variance")
    return float((math.sqrt(1.0 - r_far) - math.sqrt(1.0 - r_neighbor)) ** 2)


def sample_size_bound(model: RingModel, epsilon: float) -> float:
    """Samples guaranteeing connected recovery with probability 1 - epsilon.

    pi^3 ||Sigma||_op / (2 gap) * dim * (3 ln dim - ln epsilon); an upper
    bound whose constant is loose, so empirical thresholds sit far below.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    gap = correlation_gap(model)
    if gap <= 0:
        raise ZeroGapError("correlation gap is zero; the bound is infinite")
    d = model.dim
    return math.pi**3 * model.operator_norm() / (2.0 * gap) * d * (3.0 * math.log(d) - math.log(epsilon))


def is_ring_connected(pairing, dim: int) -> bool:
    return all((b - a) % dim in (1, dim - 1) for a, b in pairing)


def tv_recovery_trial(model: RingModel, n_samples: int, seed) -> tuple[tuple, bool]:
    """One experiment: sample, minimize total variation exactly, test adjacency."""
    batch = sample(model, n_samples, seed)
    pairing = match_exact(cost_l1(batch, mode="free"))
    return pairing, is_ring_connected(pairing, model.dim)


@dataclass(frozen=True)
class RecoveryGrid:
    """Monte-Carlo success probabilities over a (dim, n_samples) grid."""

    dims: tuple[int, ...]
    sample_sizes: tuple[int, ...]
    trials: int
    estimates: np.ndarray = field(repr=False)   # (len(dims), len(sample_sizes))

    def threshold_crossing(self, target: float = 0.8) -> dict[int, int | None]:
        """Smallest swept n_samples reaching the target success rate, per dim."""
        out = {}
        for i, d in enumerate(self.dims):
            hits = np.nonzero(self.estimates[i] >= target)[0]
            out[d] = int(self.sample_sizes[hits[0]]) if hits.size else None
        return out

    def csv_rows(self) -> list[str]:
        rows = ["d,N,trials,success_rate"]
        for i, d in enumerate(self.dims):
            for k, n in enumerate(self.sample_sizes):
                rows.append(f"{d},{n},{self.trials},{self.estimates[i, k]:.6f}")
        return rows


def recovery_grid(
    model_family,
    dims,
    sample_sizes,
    trials: int,
    seed: int,
) -> RecoveryGrid:
    """Success frequency of connected recovery per (dim, n_samples) cell.

    ``model_family`` maps a dimension to a RingModel.  Every trial draws
    fresh samples under a seed derived from (seed, dim, n_samples, trial),
    so cells are independent and the whole grid is reproducible.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dims = tuple(int(d) for d in dims)
    sample_sizes = tuple(int(n) for n in sample_sizes)
    estimates = np.zeros((len(dims), len(sample_sizes)))
    for i, d in enumerate(dims):
        model = model_family(d)
        for k, n in enumerate(sample_sizes):
            wins = 0
            for t in range(trials):
                trial_seed = np.random.SeedSequence(entropy=(seed, d, n, t))
                _, connected = tv_recovery_trial(model, n, trial_seed)
                wins += connected
            estimates[i, k] = wins / trials
    return RecoveryGrid(dims=dims, sample_sizes=sample_sizes, trials=trials, estimates=estimates)
