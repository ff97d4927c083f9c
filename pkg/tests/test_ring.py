import math

import numpy as np
import pytest

from haarscatter import (
    RingModel,
    correlation_gap,
    recovery_grid,
    ring_model,
    sample,
    sample_size_bound,
    tv_recovery_trial,
)
from haarscatter.errors import EmptyBatchError, InvalidModelError, ZeroGapError
from haarscatter.ring import CONCENTRATION_CONSTANT, is_ring_connected


def white_noise_model(dim):
    corr = np.zeros(dim)
    corr[0] = 1.0
    return RingModel(dim=dim, correlations=corr)


def test_model_validation():
    with pytest.raises(InvalidModelError):
        RingModel(dim=8, correlations=np.array([1, 0.5, 0, 0, 0, 0, 0, 0.1]))  # asymmetric
    with pytest.raises(InvalidModelError):
        # corr(u) = 1 everywhere except a sign flip: strongly non-PSD
        corr = np.ones(8)
        corr[4] = -3.0
        RingModel(dim=8, correlations=corr)
    with pytest.raises(InvalidModelError):
        RingModel(dim=8, correlations=np.zeros(8))


def test_default_family_is_psd_without_clipping():
    for dim in (8, 16, 32, 64):
        model = ring_model(dim)
        assert model.correlations[0] == 1.0
        assert model.correlations[1] == pytest.approx(0.44)
        assert model.correlations[2] == pytest.approx(0.06)
        assert model.spectrum().min() > 0


def test_sampler_white_noise_lag1():
    model = white_noise_model(16)
    n = 4000
    batch = sample(model, n, seed=0)
    lag1 = np.mean(batch[:, :-1] * batch[:, 1:])
    assert abs(lag1) <= 3 / math.sqrt(n)


def test_sampler_variance_matches_zero_lag():
    model = ring_model(16)
    batch = sample(model, 10_000, seed=1)
    assert batch[:, 0].var() == pytest.approx(model.correlations[0], rel=0.05)


def test_sampler_deterministic():
    model = ring_model(8)
    assert np.array_equal(sample(model, 5, seed=42), sample(model, 5, seed=42))
    with pytest.raises(EmptyBatchError):
        sample(model, 0, seed=0)


def test_sampler_covariance_entrywise():
    model = ring_model(8)
    batch = sample(model, 100_000, seed=2)
    empirical = batch.T @ batch / batch.shape[0]
    assert np.abs(empirical - model.covariance()).max() <= 5e-2


def test_correlation_gap_value():
    gap = correlation_gap(ring_model(16))
    expected = (math.sqrt(1 - 0.06) - math.sqrt(1 - 0.44)) ** 2
    assert gap == pytest.approx(expected, rel=1e-12)
    assert gap == pytest.approx(0.0489, abs=1e-4)


def test_correlation_gap_degenerate_cases():
    corr = np.full(8, 0.3)
    corr[0] = 1.0
    assert correlation_gap(RingModel(dim=8, correlations=corr)) == 0.0
    assert correlation_gap(white_noise_model(8)) == 0.0


def test_gap_scale_invariance_and_bound_scaling():
    model = ring_model(16)
    scaled = RingModel(dim=16, correlations=3.0 * model.correlations)
    assert correlation_gap(scaled) == pytest.approx(correlation_gap(model), rel=1e-12)
    assert sample_size_bound(scaled, 0.2) == pytest.approx(
        3.0 * sample_size_bound(model, 0.2), rel=1e-12
    )


def test_sample_size_bound_concrete_value():
    model = ring_model(16)
    gap = (math.sqrt(1 - 0.06) - math.sqrt(1 - 0.44)) ** 2
    op_norm = 1.0 + 2 * 0.44 + 13 * 0.06  # flat spectrum peak at frequency zero
    expected = math.pi**3 * op_norm / (2 * gap) * 16 * (3 * math.log(16) - math.log(0.2))
    assert model.operator_norm() == pytest.approx(op_norm, rel=1e-12)
    assert sample_size_bound(model, 0.2) == pytest.approx(expected, rel=1e-12)
    assert 1.3e5 < expected < 1.4e5  # frozen magnitude regression


def test_sample_size_bound_growth():
    # d log d growth: doubling d slightly more than doubles d * 3 log d even
    # for fixed spectrum; smaller epsilon only adds -log(eps).
    for d in (8, 16, 32):
        lo = sample_size_bound(ring_model(d), 0.2)
        hi = sample_size_bound(ring_model(2 * d), 0.2)
        assert hi > 2 * lo
    assert sample_size_bound(ring_model(16), 0.05) > sample_size_bound(ring_model(16), 0.2)
    with pytest.raises(ZeroGapError):
        sample_size_bound(white_noise_model(8), 0.2)
    with pytest.raises(ValueError):
        sample_size_bound(ring_model(8), 1.5)


def test_concentration_constant_documented():
    assert CONCENTRATION_CONSTANT == pytest.approx(2 / math.pi**2)


def test_tv_recovery_extreme_neighbor_correlation():
    model = ring_model(8, neighbor=0.95, far=0.0)
    wins = sum(tv_recovery_trial(model, 64, seed=s)[1] for s in range(20))
    assert wins >= 19


def test_tv_recovery_white_noise_rarely_connected():
    model = white_noise_model(16)
    wins = sum(tv_recovery_trial(model, 2, seed=s)[1] for s in range(200))
    assert wins / 200 <= 0.05


def test_tv_recovery_deterministic():
    model = ring_model(8)
    assert tv_recovery_trial(model, 16, seed=7) == tv_recovery_trial(model, 16, seed=7)


def test_is_ring_connected():
    assert is_ring_connected(((0, 1), (2, 3), (4, 5), (6, 7)), 8)
    assert is_ring_connected(((0, 7), (1, 2), (3, 4), (5, 6)), 8)
    assert not is_ring_connected(((0, 2), (1, 3), (4, 5), (6, 7)), 8)


def test_recovery_grid_properties():
    grid = recovery_grid(ring_model, dims=(8,), sample_sizes=(2, 16, 96), trials=40, seed=0)
    assert grid.estimates.shape == (1, 3)
    slack = 2 / math.sqrt(40)
    assert grid.estimates[0, 1] >= grid.estimates[0, 0] - slack
    assert grid.estimates[0, 2] >= grid.estimates[0, 1] - slack
    assert grid.csv_rows()[0] == "d,N,trials,success_rate"
    with pytest.raises(ValueError):
        recovery_grid(ring_model, dims=(8,), sample_sizes=(4,), trials=0, seed=0)


def test_recovery_grid_deterministic():
    a = recovery_grid(ring_model, dims=(8,), sample_sizes=(8,), trials=20, seed=5)
    b = recovery_grid(ring_model, dims=(8,), sample_sizes=(8,), trials=20, seed=5)
    assert np.array_equal(a.estimates, b.estimates)
