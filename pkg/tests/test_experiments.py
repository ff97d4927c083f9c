import math

import numpy as np
import pytest

from haarscatter.datasets import write_digit_idx
from haarscatter.experiments import (
    MnistOptions,
    run_mnist_pipeline,
    run_reconstruction_demo,
    run_ring_recovery,
    run_variance_table,
    variance_model_value,
)


def test_variance_table_structure_and_model_column():
    report = run_variance_table(depth=3, dim=64, n_samples=400, seed=0)
    rows = report.tables["variance"]
    assert rows[0] == "m,sigma2,model_value"
    assert len(rows) == 4  # m = 1..3
    for m, row in enumerate(rows[1:], start=1):
        fields = row.split(",")
        assert int(fields[0]) == m
        assert float(fields[2]) == pytest.approx(
            math.comb(3, m) * (1 - 2 / math.pi) ** m, rel=1e-6
        )
    assert report.config["order0_sigma2"] == pytest.approx(1.0, rel=0.25)


def test_variance_model_values_known_row():
    # Depth-5 model row, to printed precision.
    assert variance_model_value(5, 1) == pytest.approx(1.8, abs=0.05)
    assert variance_model_value(5, 2) == pytest.approx(1.3, abs=0.05)
    assert variance_model_value(5, 3) == pytest.approx(0.48, abs=0.01)
    assert variance_model_value(5, 4) == pytest.approx(0.087, abs=0.001)
    assert variance_model_value(5, 5) == pytest.approx(6.3e-3, abs=2e-4)


def test_variance_table_deterministic():
    a = run_variance_table(depth=3, dim=32, n_samples=100, seed=5)
    b = run_variance_table(depth=3, dim=32, n_samples=100, seed=5)
    assert a.tables == b.tables and a.config == b.config


def test_ring_recovery_report(tmp_path):
    report = run_ring_recovery(dims=(8,), sample_sizes=(8, 64), trials=20, seed=0)
    grid_rows = report.tables["grid"]
    assert grid_rows[0] == "d,N,trials,success_rate"
    assert len(grid_rows) == 3
    contour = report.tables["contour"]
    assert contour[0] == "d,n_star,bound"
    paths = report.write(tmp_path)
    assert len(paths) == 3
    for p in paths:
        assert (tmp_path / p.split("/")[-1]).exists()


def test_reconstruction_demo():
    report = run_reconstruction_demo(dim=8, depth=2, seed=1)
    rows = report.tables["roundtrip"]
    dim, depth, count, err = rows[1].split(",")
    assert (dim, depth, count) == ("8", "2", "4")
    assert float(err) <= 1e-10


@pytest.fixture(scope="module")
def digit_paths(tmp_path_factory):
    directory = tmp_path_factory.mktemp("digits")
    return write_digit_idx(directory, 220, 80, seed=11)


def small_opts(**kw):
    base = dict(
        geometry="known",
        depth=4,
        n_transforms=2,
        n_train=220,
        n_test=80,
        target_features=100,
        seed=3,
    )
    base.update(kw)
    return MnistOptions(**base)


def test_mnist_pipeline_known_small(digit_paths):
    report, saved = run_mnist_pipeline(
        digit_paths["train_images"],
        digit_paths["train_labels"],
        digit_paths["test_images"],
        digit_paths["test_labels"],
        small_opts(),
    )
    error = float(report.tables["summary"][1].split(",")[1])
    assert 0 <= error <= 0.5  # sanity at tiny scale
    assert report.tables["connectivity"][1] == "1,1.000000"  # grid pairings are grid-connected
    assert saved.selection is not None and saved.classifier is not None


def test_mnist_pipeline_scrambled_small_runs(digit_paths):
    report, _ = run_mnist_pipeline(
        digit_paths["train_images"],
        digit_paths["train_labels"],
        digit_paths["test_images"],
        digit_paths["test_labels"],
        small_opts(geometry="scrambled", n_transforms=1, matcher="greedy", depth=4),
    )
    levels = [row.split(",")[0] for row in report.tables["connectivity"][1:]]
    assert levels == ["1", "2", "3", "4"]


def test_mnist_pipeline_deterministic(digit_paths):
    args = [
        digit_paths["train_images"],
        digit_paths["train_labels"],
        digit_paths["test_images"],
        digit_paths["test_labels"],
    ]
    a, _ = run_mnist_pipeline(*args, small_opts())
    b, _ = run_mnist_pipeline(*args, small_opts())
    assert a.tables == b.tables and a.config == b.config
