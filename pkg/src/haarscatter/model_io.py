"""Versioned model files: transforms, selection state, classifier, metadata.

One JSON document with canonical key order and separators, so identical
models serialize byte-identically and save/load/save round-trips exactly
(float64 survives JSON's repr formatting losslessly).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .classify import ClassSelection, GaussianKernelClassifier, SelectionState
from .core import HaarNetwork
from .errors import CorruptFileError, HaarScatterError, VersionMismatchError
from .learn import BaggedModel, TrainConfig

FORMAT_NAME = "haarscatter-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class SavedModel:
    """Everything a trained pipeline needs to transform and classify."""

    bagged: BaggedModel
    max_order: int | None = None
    feature_columns: tuple | None = None
    selection: SelectionState | None = None
    classifier: GaussianKernelClassifier | None = None


def _encode(model: SavedModel) -> dict:
    cfg = model.bagged.config
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "transforms": {
            "mode": model.bagged.transforms[0].mode,
            "dim": model.bagged.transforms[0].dim,
            "layers": [
                [[list(pair) for pair in pairing] for pairing in net.layers]
                for net in model.bagged.transforms
            ],
        },
        "training": {
            "depth": cfg.depth,
            "mode": cfg.mode,
            "norm": cfg.norm,
            "matcher": cfg.matcher,
            "seed": cfg.seed,
            "allow_signed": cfg.allow_signed,
            "subset_assignment": list(model.bagged.subset_assignment),
        },
        "max_order": model.max_order,
        "feature_columns": None
        if model.feature_columns is None
        else [c if isinstance(c, str) else list(c) for c in model.feature_columns],
        "selection": None,
        "classifier": None,
    }
    if model.selection is not None:
        doc["selection"] = {
            "classes": list(model.selection.classes),
            "n_raw_features": model.selection.n_raw_features,
            "per_class": [
                {
                    "indices": list(sel.indices),
                    "alphas": list(sel.alphas),
                    "residuals": list(sel.residuals),
                    "weights": sel.weights.tolist(),
                }
                for sel in model.selection.per_class
            ],
        }
    if model.classifier is not None:
        clf = model.classifier
        doc["classifier"] = {
            "bandwidth": clf.bandwidth,
            "regularization": clf.regularization,
            "classes": list(clf.classes),
            "train_features": clf.train_features.tolist(),
            "dual": clf.dual.tolist(),
        }
    return doc


def _decode(doc: dict) -> SavedModel:
    transforms = doc["transforms"]
    training = doc["training"]
    cfg = TrainConfig(
        depth=training["depth"],
        mode=training["mode"],
        norm=training["norm"],
        matcher=training["matcher"],
        seed=training["seed"],
        allow_signed=training["allow_signed"],
    )
    networks = tuple(
        HaarNetwork(
            mode=transforms["mode"],
            dim=transforms["dim"],
            layers=tuple(tuple((int(a), int(b)) for a, b in pairing) for pairing in layers),
        )
        for layers in transforms["layers"]
    )
    bagged = BaggedModel(
        transforms=networks,
        subset_assignment=tuple(int(t) for t in training["subset_assignment"]),
        config=cfg,
    )
    selection = None
    if doc["selection"] is not None:
        sel_doc = doc["selection"]
        selection = SelectionState(
            classes=tuple(int(c) for c in sel_doc["classes"]),
            n_raw_features=int(sel_doc["n_raw_features"]),
            per_class=tuple(
                ClassSelection(
                    indices=tuple(int(i) for i in entry["indices"]),
                    alphas=tuple(float(a) for a in entry["alphas"]),
                    residuals=tuple(float(r) for r in entry["residuals"]),
                    weights=np.asarray(entry["weights"], dtype=float),
                )
                for entry in sel_doc["per_class"]
            ),
        )
    classifier = None
    if doc["classifier"] is not None:
        clf_doc = doc["classifier"]
        classifier = GaussianKernelClassifier(
            bandwidth=float(clf_doc["bandwidth"]),
            regularization=float(clf_doc["regularization"]),
            classes=tuple(int(c) for c in clf_doc["classes"]),
            train_features=np.asarray(clf_doc["train_features"], dtype=float),
            dual=np.asarray(clf_doc["dual"], dtype=float),
        )
    columns = doc["feature_columns"]
    if columns is not None:
        columns = tuple(c if isinstance(c, str) else (int(c[0]), int(c[1])) for c in columns)
    return SavedModel(
        bagged=bagged,
        max_order=doc["max_order"],
        feature_columns=columns,
        selection=selection,
        classifier=classifier,
    )


def model_to_bytes(model: SavedModel) -> bytes:
    doc = _encode(model)
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def save_model(path, model: SavedModel) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> SavedModel:
    try:
        with open(path, "rb") as fh:
            doc = json.loads(fh.read().decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptFileError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: version {doc.get('version')!r}, supported {FORMAT_VERSION}"
        )
    try:
        return _decode(doc)
    except (KeyError, TypeError, IndexError, HaarScatterError) as exc:
        raise CorruptFileError(f"{path}: malformed model document ({exc})") from exc
