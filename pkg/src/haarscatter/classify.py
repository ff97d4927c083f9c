"""Supervised stage: forward feature selection and a Gaussian-kernel classifier.

Scattering coefficients from all bagged transforms form one dictionary
(plus a constant column).  Per class, features are selected greedily by
correlation with the class indicator, with Gram-Schmidt orthogonalization
of the remaining dictionary after every pick, so selected features are
decorrelated over the training set.  The union of all classes' selected
features, unit-normalized per sample, feeds a kernel classifier trained by
regularized least squares, one-vs-all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import transform
from .errors import (
    DegenerateDictionaryError,
    DimensionMismatchError,
    SingularSystemError,
)
from .learn import BaggedModel

_NORM_GUARD = 1e-10


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-sample dictionary values plus a descriptor per column.

    Column 0 is the constant feature; column descriptors for scattering
    coefficients are (transform index, flat coefficient index).
    """

    values: np.ndarray
    columns: tuple

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def build_features(
    model: BaggedModel, batch: np.ndarray, max_order: int | None = None, allow_signed: bool = False
) -> FeatureMatrix:
    """Deepest-layer coefficients of every bagged transform, plus a constant.

    ``max_order`` drops coefficients computed through more than that many
    absolute values (they carry negligible energy); None keeps all.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if batch.shape[1] != model.dim:
        raise DimensionMismatchError(f"signals of length {batch.shape[1]} != model dim {model.dim}")
    blocks = [np.ones((batch.shape[0], 1))]
    columns: list = ["const"]
    for t, network in enumerate(model.transforms):
        coeffs = transform(network, batch, allow_signed=allow_signed)
        keep = np.arange(network.dim)
        if max_order is not None:
            orders = network.coefficient_orders()[-1]
            keep = keep[orders <= max_order]
            coeffs = coeffs[:, keep]
        blocks.append(coeffs)
        columns.extend((t, int(i)) for i in keep)
    return FeatureMatrix(values=np.hstack(blocks), columns=tuple(columns))


@dataclass(frozen=True)
class ClassSelection:
    """Greedy picks for one class.

    ``alphas`` and ``residuals`` include the preselected constant as step
    0; ``weights`` maps raw features to the K greedy orthonormal features
    (constant excluded), one column per pick.
    """

    indices: tuple[int, ...]
    alphas: tuple[float, ...]
    residuals: tuple[float, ...]
    weights: np.ndarray


@dataclass(frozen=True)
class SelectionState:
    classes: tuple[int, ...]
    per_class: tuple[ClassSelection, ...]
    n_raw_features: int

    @property
    def n_selected(self) -> int:
        return sum(len(sel.indices) for sel in self.per_class)

    def feature_map(self) -> np.ndarray:
        """(n_raw_features, M) linear map onto all selected orthonormal features."""
        return np.hstack([sel.weights for sel in self.per_class])

    def transform(self, features) -> np.ndarray:
        values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)
        if values.shape[1] != self.n_raw_features:
            raise DimensionMismatchError(
                f"{values.shape[1]} raw features, selection was fit on {self.n_raw_features}"
            )
        return values @ self.feature_map()


def ols_select(
    features: FeatureMatrix | np.ndarray,
    labels: np.ndarray,
    n_select: int,
    preselect: tuple[int, ...] = (0,),
) -> SelectionState:
    """Per-class orthogonal forward selection over the feature dictionary.

    Each step picks the candidate maximizing |correlation| with the class
    indicator after unit normalization, then orthogonalizes the remaining
    dictionary against the pick; the training residual is nonincreasing
    and equals sum(f^2) - sum(alpha^2) after every step.  ``preselect``
    columns (the constant, by default) are regressed out first, which
    mean-centers all candidates.  Ties go to the smallest feature index.
    """
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    n, p = values.shape
    if labels.shape != (n,):
        raise DimensionMismatchError(f"{labels.shape} labels for {n} samples")
    classes = tuple(int(c) for c in np.unique(labels))
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    if n_select < 1:
        raise ValueError("n_select must be >= 1")
    if n <= n_select:
        raise ValueError(f"need more samples ({n}) than selected features ({n_select})")

    base_norms2 = (values**2).sum(axis=0)
    selections = []
    for cls in classes:
        target = (labels == cls).astype(float)
        # Orthogonalization is tracked implicitly: for each original column
        # phi_p, its residual against the picked orthonormal features u_l has
        # squared norm ||phi_p||^2 - sum_l <phi_p, u_l>^2 and correlation
        # <y, phi_p> - sum_l <y, u_l> <phi_p, u_l>, so each step costs one
        # pass over the original dictionary instead of rewriting it.
        norms2 = base_norms2.copy()
        numerators = target @ values
        available = np.ones(p, dtype=bool)
        ortho_units: list[np.ndarray] = []
        weight_units: list[np.ndarray] = []
        picked: list[int] = []
        alphas: list[float] = []
        residuals: list[float] = []
        residual = float(target @ target)

        def take(idx: int):
            nonlocal residual
            # Modified Gram-Schmidt with one re-orthogonalization pass; the
            # raw-feature weight vector gets the same coefficients, so
            # values @ w reproduces the orthonormal feature exactly.
            unit = values[:, idx].copy()
            w = np.zeros(p)
            w[idx] = 1.0
            for _ in range(2):
                for u, wu in zip(ortho_units, weight_units):
                    coef = float(unit @ u)
                    unit -= coef * u
                    w -= coef * wu
            norm = float(np.linalg.norm(unit))
            if norm < _NORM_GUARD:
                raise DegenerateDictionaryError(f"feature {idx} has zero residual norm")
            unit /= norm
            w /= norm
            alpha = float(target @ unit)
            gains = unit @ values
            norms2[:] = np.maximum(norms2 - gains**2, 0.0)
            numerators[:] = numerators - alpha * gains
            available[idx] = False
            norms2[idx] = 0.0
            ortho_units.append(unit)
            weight_units.append(w)
            alphas.append(alpha)
            residual -= alpha**2
            residuals.append(residual)

        for idx in preselect:
            take(int(idx))

        for _ in range(n_select):
            candidate = available & (norms2 > _NORM_GUARD**2)
            if not candidate.any():
                raise DegenerateDictionaryError(
                    "every remaining candidate has zero norm after orthogonalization"
                )
            corr = np.zeros(p)
            cols = np.nonzero(candidate)[0]
            corr[cols] = numerators[cols] / np.sqrt(norms2[cols])
            best = int(np.argmax(np.abs(corr)))
            picked.append(best)
            take(best)

        selections.append(
            ClassSelection(
                indices=tuple(picked),
                alphas=tuple(alphas),
                residuals=tuple(residuals),
                weights=np.stack(weight_units[len(preselect) :], axis=1),
            )
        )
    return SelectionState(classes=classes, per_class=tuple(selections), n_raw_features=p)


def unit_normalize_rows(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row to Euclidean norm 1; zero rows stay zero and are flagged."""
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    zero = norms[..., 0] == 0
    safe = np.where(norms == 0, 1.0, norms)
    return x / safe, zero


def _gaussian_gram(a: np.ndarray, b: np.ndarray, bandwidth: float) -> np.ndarray:
    sq = ((a**2).sum(axis=1)[:, None] + (b**2).sum(axis=1)[None, :] - 2.0 * (a @ b.T))
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * bandwidth**2))


@dataclass(frozen=True)
class GaussianKernelClassifier:
    """One-vs-all kernel regularized least squares on normalized features.

    ``dual`` holds one coefficient vector per class over the stored
    training features; prediction is the argmax of the per-class kernel
    scores, ties to the smallest class index.
    """

    bandwidth: float
    regularization: float
    classes: tuple[int, ...]
    train_features: np.ndarray
    dual: np.ndarray

    def scores(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if features.shape[1] != self.train_features.shape[1]:
            raise DimensionMismatchError(
                f"{features.shape[1]} features, classifier was fit on {self.train_features.shape[1]}"
            )
        return _gaussian_gram(features, self.train_features, self.bandwidth) @ self.dual

    def predict(self, features: np.ndarray) -> np.ndarray:
        cls = np.asarray(self.classes)
        return cls[np.argmax(self.scores(features), axis=1)]


def fit_kernel_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    bandwidth: float = 1.0,
    regularization: float = 1e-3,
) -> GaussianKernelClassifier:
    """Solve (G + reg I) a_c = 1{label = c} per class on the Gaussian Gram G."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if features.shape[0] != labels.shape[0]:
        raise DimensionMismatchError("features and labels disagree on sample count")
    classes = tuple(int(c) for c in np.unique(labels))
    gram = _gaussian_gram(features, features, bandwidth)
    gram[np.diag_indices_from(gram)] += regularization
    targets = np.stack([(labels == c).astype(float) for c in classes], axis=1)
    try:
        factor = scipy.linalg.cho_factor(gram)
        dual = scipy.linalg.cho_solve(factor, targets)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystemError(f"kernel system not solvable: {exc}") from exc
    return GaussianKernelClassifier(
        bandwidth=float(bandwidth),
        regularization=float(regularization),
        classes=classes,
        train_features=features.copy(),
        dual=dual,
    )
