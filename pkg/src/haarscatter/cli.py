"""Command-line entry points.

Subcommands: train, transform, classify, scramble, and the experiment
drivers (variance-table, ring-recovery, mnist, reconstruct).  Every
command is deterministic given --seed and writes CSV/JSON artifacts under
--out.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .classify import build_features, fit_kernel_classifier, ols_select, unit_normalize_rows
from .datasets import (
    Dataset,
    load_dataset,
    load_csv_dataset,
    load_idx_images,
    load_idx_labels,
    save_idx_images,
    scramble,
)
from .experiments import (
    ExperimentReport,
    MnistOptions,
    run_mnist_pipeline,
    run_reconstruction_demo,
    run_ring_recovery,
    run_variance_table,
)
from .learn import TrainConfig, train_bagged
from .model_io import SavedModel, load_model, save_model


def _load_any_dataset(images, labels) -> Dataset:
    if images.endswith(".csv"):
        return load_csv_dataset(images)
    return load_dataset(images, labels)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--depth", type=int, default=4)
    parser.add_argument("--transforms", type=int, default=1, help="number of bagged transforms T")
    parser.add_argument("--norm", choices=("l1", "mixed"), default="l1")
    parser.add_argument("--matcher", choices=("exact", "greedy"), default="exact")
    parser.add_argument("--mode", choices=("free", "structured"), default="structured")
    parser.add_argument("--out", default=".", help="output directory")


def _write_report(report: ExperimentReport, out_dir: str, started: float) -> None:
    paths = report.write(out_dir)
    elapsed = time.perf_counter() - started
    for path in paths:
        print(path)
    print(f"done in {elapsed:.1f}s", file=sys.stderr)


def cmd_train(args) -> int:
    ds = _load_any_dataset(args.images, args.labels)
    cfg = TrainConfig(
        depth=args.depth, mode=args.mode, norm=args.norm, matcher=args.matcher, seed=args.seed
    )
    model = train_bagged(ds.images, args.transforms, cfg)
    save_model(args.model, SavedModel(bagged=model))
    print(args.model)
    return 0


def cmd_transform(args) -> int:
    saved = load_model(args.model)
    ds = _load_any_dataset(args.images, args.labels)
    feats = build_features(saved.bagged, ds.images, max_order=saved.max_order)
    header = ",".join(
        "const" if c == "const" else f"t{c[0]}_c{c[1]}" for c in feats.columns
    )
    with open(args.out_file, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in feats.values:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    print(args.out_file)
    return 0


def cmd_classify(args) -> int:
    saved = load_model(args.model)
    if args.train_images:
        train = _load_any_dataset(args.train_images, args.train_labels)
        feats = build_features(saved.bagged, train.images, max_order=saved.max_order)
        per_class = max(1, args.features // len(np.unique(train.labels)))
        per_class = min(per_class, feats.n_features - 1, len(train) - 1)
        selection = ols_select(feats, train.labels, per_class)
        z, _ = unit_normalize_rows(selection.transform(feats))
        classifier = fit_kernel_classifier(
            z, train.labels, bandwidth=args.bandwidth, regularization=args.regularization
        )
        saved = SavedModel(
            bagged=saved.bagged,
            max_order=saved.max_order,
            feature_columns=feats.columns,
            selection=selection,
            classifier=classifier,
        )
        save_model(args.model, saved)
    if saved.selection is None or saved.classifier is None:
        print("model has no classifier; pass --train-images/--train-labels", file=sys.stderr)
        return 2
    test = _load_any_dataset(args.test_images, args.test_labels)
    feats = build_features(saved.bagged, test.images, max_order=saved.max_order)
    z, _ = unit_normalize_rows(saved.selection.transform(feats))
    predicted = saved.classifier.predict(z)
    with open(args.out_file, "w", encoding="utf-8") as fh:
        fh.write("index,predicted,label\n")
        for i, (p, t) in enumerate(zip(predicted, test.labels)):
            fh.write(f"{i},{p},{t}\n")
    error = float(np.mean(predicted != test.labels))
    print(f"test_error,{error:.6f}")
    print(args.out_file)
    return 0


def cmd_scramble(args) -> int:
    images = load_idx_images(args.images)
    labels = (
        load_idx_labels(args.labels) if args.labels else np.zeros(images.shape[0], dtype=int)
    )
    n, h, w = images.shape
    ds = Dataset(
        images=images.reshape(n, h * w).astype(float), labels=labels, geometry=("grid", h, w)
    )
    out = scramble(ds, args.seed)
    save_idx_images(args.out_file, out.images.reshape(n, h, w).astype(np.uint8))
    print(args.out_file)
    return 0


def cmd_experiment(args) -> int:
    started = time.perf_counter()
    if args.experiment == "variance-table":
        report = run_variance_table(args.depth, args.dim, args.samples, args.seed)
    elif args.experiment == "ring-recovery":
        report = run_ring_recovery(
            dims=tuple(args.dims),
            sample_sizes=tuple(args.sample_sizes),
            trials=args.trials,
            seed=args.seed,
        )
    elif args.experiment == "mnist":
        opts = MnistOptions(
            geometry=args.geometry,
            mode=args.mode,
            depth=args.depth,
            n_transforms=args.transforms,
            norm=args.norm,
            matcher=args.matcher,
            n_train=args.train_size,
            n_test=args.test_size,
            target_features=args.features,
            seed=args.seed,
        )
        report, saved = run_mnist_pipeline(
            args.train_images, args.train_labels, args.test_images, args.test_labels, opts
        )
        if args.save_model:
            save_model(args.save_model, saved)
    else:
        report = run_reconstruction_demo(dim=args.dim, depth=args.depth, seed=args.seed)
    _write_report(report, args.out, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haarscatter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="learn bagged scattering transforms (unsupervised)")
    _add_common(p)
    p.add_argument("--images", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--model", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transform", help="apply a saved model's transforms to data")
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--out-file", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("classify", help="fit/apply the feature selection + kernel classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--train-images", default=None)
    p.add_argument("--train-labels", default=None)
    p.add_argument("--test-images", required=True)
    p.add_argument("--test-labels", required=True)
    p.add_argument("--features", type=int, default=1000, help="target total selected features M")
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--regularization", type=float, default=1e-3)
    p.add_argument("--out-file", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("scramble", help="apply one seeded pixel permutation to an IDX file")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-file", required=True)
    p.set_defaults(func=cmd_scramble)

    p = sub.add_parser("experiment", help="run a reproducible experiment driver")
    exp = p.add_subparsers(dest="experiment", required=True)

    e = exp.add_parser("variance-table")
    _add_common(e)
    e.set_defaults(depth=5)
    e.add_argument("--dim", type=int, default=1024)
    e.add_argument("--samples", type=int, default=10000)
    e.set_defaults(func=cmd_experiment)

    e = exp.add_parser("ring-recovery")
    _add_common(e)
    e.add_argument("--dims", type=int, nargs="+", default=[8, 16, 32])
    e.add_argument("--sample-sizes", type=int, nargs="+", default=[4, 8, 16, 32, 64, 128, 256])
    e.add_argument("--trials", type=int, default=100)
    e.set_defaults(func=cmd_experiment)

    e = exp.add_parser("mnist")
    _add_common(e)
    e.set_defaults(depth=6, transforms=4, matcher="greedy")
    e.add_argument("--train-images", required=True)
    e.add_argument("--train-labels", required=True)
    e.add_argument("--test-images", required=True)
    e.add_argument("--test-labels", required=True)
    e.add_argument("--geometry", choices=("known", "scrambled"), default="known")
    e.add_argument("--train-size", type=int, default=2000)
    e.add_argument("--test-size", type=int, default=1000)
    e.add_argument("--features", type=int, default=1000)
    e.add_argument("--save-model", default=None)
    e.set_defaults(func=cmd_experiment)

    e = exp.add_parser("reconstruct")
    _add_common(e)
    e.set_defaults(depth=3)
    e.add_argument("--dim", type=int, default=16)
    e.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
