"""Experiment drivers: variance decay, ring recovery, digit classification.

Every driver is deterministic given its seed and returns an
ExperimentReport whose CSV tables and config are byte-stable, so repeated
runs can be compared file-for-file.  Wall-clock timing is logged but kept
out of the persisted report for exactly that reason.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .classify import build_features, fit_kernel_classifier, ols_select, unit_normalize_rows
from .core import apply_layer, random_network
from .datasets import Dataset, load_dataset, scramble, scramble_permutation
from .errors import DimensionMismatchError
from .graph import DyadicPartition, ReferenceGraph, build_partition, connectivity_fraction
from .gridpair import grid_pairing_variants
from .inverse import forward_bag, make_interlaced, reconstruct
from .learn import BaggedModel, TrainConfig, train_bagged
from .model_io import SavedModel
from .ring import recovery_grid, ring_model, sample_size_bound


@dataclass
class ExperimentReport:
    """Named CSV tables plus the full run configuration."""

    name: str
    config: dict
    tables: dict[str, list[str]] = field(default_factory=dict)

    def table_bytes(self, table: str) -> bytes:
        return ("\n".join(self.tables[table]) + "\n").encode("utf-8")

    def config_bytes(self) -> bytes:
        return (json.dumps(self.config, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")

    def write(self, out_dir) -> list[str]:
        os.makedirs(out_dir, exist_ok=True)
        written = []
        for table in sorted(self.tables):
            path = os.path.join(out_dir, f"{self.name}-{table}.csv")
            with open(path, "wb") as fh:
                fh.write(self.table_bytes(table))
            written.append(path)
        cfg_path = os.path.join(out_dir, f"{self.name}-config.json")
        with open(cfg_path, "wb") as fh:
            fh.write(self.config_bytes())
        written.append(cfg_path)
        return written


def variance_model_value(depth: int, order: int) -> float:
    """Predicted normalized variance of all order-m coefficients: binom(J,m) (1-2/pi)^m."""
    return math.comb(depth, order) * (1.0 - 2.0 / math.pi) ** order


def run_variance_table(depth: int, dim: int, n_samples: int, seed: int) -> ExperimentReport:
    """Variance of white-noise scattering coefficients per order, against the model.

    Draws standard normal signals, scatters them through random structured
    pairings, and accumulates the per-coefficient variance of the
    2**(-J/2)-normalized output, summed per order and averaged over rows.
    Order 0 is reported in the config (its variance is 1 by normalization,
    not part of the decay law).
    """
    rng = np.random.default_rng(seed)
    network = random_network(dim, depth, "structured", rng)
    batch = rng.standard_normal((n_samples, dim))
    values = batch
    for j in range(depth):
        values = apply_layer(network, values, j)
    variances = values.var(axis=0)
    orders = network.coefficient_orders()[-1]
    rows = ["m,sigma2,model_value"]
    sigma2 = {}
    for m in range(0, depth + 1):
        sigma2[m] = float(variances[orders == m].sum()) / dim
    for m in range(1, depth + 1):
        rows.append(f"{m},{sigma2[m]:.6e},{variance_model_value(depth, m):.6e}")
    config = {
        "experiment": "variance-table",
        "depth": depth,
        "dim": dim,
        "n_samples": n_samples,
        "seed": seed,
        "order0_sigma2": round(sigma2[0], 12),
    }
    return ExperimentReport(name="variance-table", config=config, tables={"variance": rows})


def run_ring_recovery(
    dims=(8, 16, 32),
    sample_sizes=(4, 8, 16, 32, 64, 128, 256),
    trials: int = 100,
    seed: int = 0,
    neighbor: float = 0.44,
    far: float = 0.06,
    epsilon: float = 0.2,
) -> ExperimentReport:
    """Connected-recovery success rates over a (dim, sample count) grid.

    Also tabulates, per dimension, the smallest swept sample count whose
    success rate reaches 1 - epsilon next to the theoretical bound.
    """
    family = lambda d: ring_model(d, neighbor=neighbor, far=far)
    grid = recovery_grid(family, dims, sample_sizes, trials, seed)
    contour = grid.threshold_crossing(1.0 - epsilon)
    contour_rows = ["d,n_star,bound"]
    for d in grid.dims:
        bound = sample_size_bound(family(d), epsilon)
        n_star = contour[d] if contour[d] is not None else ""
        contour_rows.append(f"{d},{n_star},{bound:.6e}")
    config = {
        "experiment": "ring-recovery",
        "dims": list(grid.dims),
        "sample_sizes": list(grid.sample_sizes),
        "trials": trials,
        "seed": seed,
        "neighbor_correlation": neighbor,
        "far_correlation": far,
        "epsilon": epsilon,
    }
    return ExperimentReport(
        name="ring-recovery",
        config=config,
        tables={"grid": grid.csv_rows(), "contour": contour_rows},
    )


def _subsample(ds: Dataset, count: int, rng: np.random.Generator) -> Dataset:
    if count >= len(ds):
        return ds
    idx = np.sort(rng.choice(len(ds), size=count, replace=False))
    return ds.subset(idx)


@dataclass
class MnistOptions:
    geometry: str = "known"        # "known" | "scrambled"
    mode: str = "structured"       # pairing-learning mode in the scrambled regime
    depth: int = 6
    n_transforms: int = 4
    norm: str = "l1"
    matcher: str = "greedy"
    n_train: int = 2000
    n_test: int = 1000
    target_features: int = 1000    # M = K * n_classes, clipped to what is feasible
    max_order: int | None = 4
    bandwidth: float = 1.0
    regularization: float = 1e-3
    seed: int = 0
    activity_threshold: float = 0.0
    connectivity_levels: int = 5


def run_mnist_pipeline(
    train_images_path,
    train_labels_path,
    test_images_path,
    test_labels_path,
    options: MnistOptions | None = None,
) -> tuple[ExperimentReport, SavedModel]:
    """Digit classification end to end, with connectivity diagnostics.

    Known geometry: bag shifted/rotated grid pairings.  Scrambled: apply
    one hidden pixel permutation to train and test, learn pairings without
    it, and score how connected the learned partitions are back in the
    true pixel grid (evaluated on active pixels only).
    """
    opts = options or MnistOptions()
    rng = np.random.default_rng(opts.seed)
    train = _subsample(load_dataset(train_images_path, train_labels_path), opts.n_train, rng)
    test = _subsample(load_dataset(test_images_path, test_labels_path), opts.n_test, rng)
    if train.geometry is None or train.geometry[0] != "grid":
        raise DimensionMismatchError("the digit pipeline needs grid-shaped input data")
    height, width = train.geometry[1], train.geometry[2]

    perm = None
    if opts.geometry == "scrambled":
        scramble_seed = int(rng.integers(0, 2**32))
        perm = scramble_permutation(train.dim, scramble_seed)
        train = scramble(train, scramble_seed)
        test = scramble(test, scramble_seed)

    cfg = TrainConfig(
        depth=opts.depth,
        mode=opts.mode if opts.geometry == "scrambled" else "structured",
        norm=opts.norm,
        matcher=opts.matcher,
        seed=opts.seed,
    )
    if opts.geometry == "known":
        networks = grid_pairing_variants(height, width, opts.depth, opts.n_transforms)
        model = BaggedModel.from_networks(networks, cfg)
    else:
        model = train_bagged(train.images, opts.n_transforms, cfg)

    train_feats = build_features(model, train.images, max_order=opts.max_order)
    test_feats = build_features(model, test.images, max_order=opts.max_order)
    classes = np.unique(train.labels)
    per_class = max(1, opts.target_features // len(classes))
    per_class = min(per_class, train_feats.n_features - 1, len(train) - 1)
    selection = ols_select(train_feats, train.labels, per_class)
    train_z, _ = unit_normalize_rows(selection.transform(train_feats))
    test_z, _ = unit_normalize_rows(selection.transform(test_feats))
    classifier = fit_kernel_classifier(
        train_z, train.labels, bandwidth=opts.bandwidth, regularization=opts.regularization
    )
    predicted = classifier.predict(test_z)
    error_rate = float(np.mean(predicted != test.labels))

    summary = ["metric,value"]
    summary.append(f"test_error,{error_rate:.6f}")
    summary.append(f"n_train,{len(train)}")
    summary.append(f"n_test,{len(test)}")
    summary.append(f"n_selected,{selection.n_selected}")
    tables = {"summary": summary}

    # Connectivity of the learned (or fixed) partitions in the true pixel grid.
    if cfg.mode == "structured":
        graph = ReferenceGraph.grid8(height, width)
        active = np.nonzero(
            np.abs(_unscrambled(train.images, perm)).max(axis=0) > opts.activity_threshold
        )[0]
        levels = min(opts.connectivity_levels, opts.depth)
        fractions = np.zeros(levels)
        for network in model.transforms:
            partition = _relabel_partition(build_partition(network), perm)
            for level in range(1, levels + 1):
                fractions[level - 1] += connectivity_fraction(
                    partition, graph, level, mask=active
                )
        fractions /= len(model.transforms)
        conn_rows = ["level,connectivity_fraction"]
        for level in range(1, levels + 1):
            conn_rows.append(f"{level},{fractions[level - 1]:.6f}")
        tables["connectivity"] = conn_rows

    config = {
        "experiment": "mnist-pipeline",
        "geometry": opts.geometry,
        "mode": cfg.mode,
        "depth": opts.depth,
        "n_transforms": opts.n_transforms,
        "norm": opts.norm,
        "matcher": opts.matcher,
        "n_train": len(train),
        "n_test": len(test),
        "target_features": opts.target_features,
        "per_class_features": int(per_class),
        "max_order": opts.max_order,
        "bandwidth": opts.bandwidth,
        "regularization": opts.regularization,
        "seed": opts.seed,
        "grid": [height, width],
    }
    report = ExperimentReport(name="mnist", config=config, tables=tables)
    saved = SavedModel(
        bagged=model,
        max_order=opts.max_order,
        feature_columns=train_feats.columns,
        selection=selection,
        classifier=classifier,
    )
    return report, saved


def _unscrambled(images: np.ndarray, perm) -> np.ndarray:
    """Undo the hidden permutation so pixel activity is judged in true positions."""
    if perm is None:
        return images
    inverse = np.argsort(perm)
    return images[:, inverse]


def _relabel_partition(partition: DyadicPartition, perm) -> DyadicPartition:
    """Rename partition vertices back to true pixel positions."""
    if perm is None:
        return partition
    return DyadicPartition(
        levels=tuple(
            tuple(tuple(int(perm[v]) for v in vertices) for vertices in level)
            for level in partition.levels
        )
    )


def run_reconstruction_demo(dim: int = 16, depth: int = 3, seed: int = 0) -> ExperimentReport:
    """Round-trip a random positive signal through all 2**J interlaced transforms."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.5, 2.0, size=dim)
    layer_pairs = tuple(make_interlaced(dim) for _ in range(depth))
    bag = forward_bag(x, layer_pairs)
    recovered = reconstruct(bag)
    max_err = float(np.abs(recovered - x).max())
    rows = ["dim,depth,n_transforms,max_abs_error", f"{dim},{depth},{2**depth},{max_err:.3e}"]
    config = {"experiment": "reconstruct", "dim": dim, "depth": depth, "seed": seed}
    return ExperimentReport(name="reconstruct", config=config, tables={"roundtrip": rows})
