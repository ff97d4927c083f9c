import numpy as np
import pytest

from haarscatter import (
    BaggedModel,
    HaarNetwork,
    TrainConfig,
    build_features,
    fit_kernel_classifier,
    ols_select,
    transform,
    unit_normalize_rows,
)
from haarscatter.errors import (
    DegenerateDictionaryError,
    DimensionMismatchError,
    SingularSystemError,
)


def toy_model(n_transforms=1, dim=4, depth=1):
    rng = np.random.default_rng(0)
    from haarscatter import random_network

    nets = [random_network(dim, depth, "structured", rng) for _ in range(n_transforms)]
    return BaggedModel.from_networks(nets, TrainConfig(depth=depth, mode="structured"))


def test_build_features_counts():
    model = toy_model(n_transforms=1, dim=4, depth=1)
    feats = build_features(model, np.random.default_rng(1).uniform(0, 1, (3, 4)))
    assert feats.values.shape == (3, 5)  # 4 coefficients + constant
    assert feats.columns[0] == "const"
    model2 = toy_model(n_transforms=3, dim=8, depth=2)
    feats2 = build_features(model2, np.random.default_rng(2).uniform(0, 1, (2, 8)))
    assert feats2.values.shape == (2, 3 * 8 + 1)


def test_build_features_identical_samples_identical_rows():
    model = toy_model(n_transforms=2, dim=8, depth=2)
    x = np.random.default_rng(3).uniform(0, 1, 8)
    feats = build_features(model, np.vstack([x, x]))
    assert np.array_equal(feats.values[0], feats.values[1])


def test_feature_columns_match_direct_forward():
    model = toy_model(n_transforms=2, dim=8, depth=2)
    batch = np.random.default_rng(4).uniform(0, 1, (5, 8))
    feats = build_features(model, batch)
    for col, descriptor in enumerate(feats.columns):
        if descriptor == "const":
            continue
        t, flat = descriptor
        direct = transform(model.transforms[t], batch)[:, flat]
        assert np.allclose(feats.values[:, col], direct)


def test_build_features_max_order_cut():
    model = toy_model(n_transforms=1, dim=4, depth=2)
    feats = build_features(model, np.random.default_rng(5).uniform(0, 1, (2, 4)), max_order=1)
    # depth-2 features per row: q in {0,1,2,3}, orders {0,1,1,2}: q=3 dropped
    kept = [c for c in feats.columns if c != "const"]
    assert len(kept) == 3
    assert all(flat % 4 != 3 for _, flat in kept)


def test_build_features_dimension_check():
    model = toy_model()
    with pytest.raises(DimensionMismatchError):
        build_features(model, np.zeros((2, 8)))


def synthetic_features(n=60, p=12, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(n, p))
    values[:, 0] = 1.0
    labels = rng.integers(0, 3, size=n)
    return values, labels


def test_perfect_correlate_selected_first():
    values, labels = synthetic_features()
    target_class = 1
    values[:, 5] = (labels == target_class).astype(float)
    state = ols_select(values, labels, 3)
    sel = state.per_class[list(state.classes).index(target_class)]
    assert sel.indices[0] == 5
    assert sel.residuals[1] <= 1e-16  # after constant + the perfect feature


def test_all_constant_features_degenerate():
    values = np.ones((20, 4))
    labels = np.array([0, 1] * 10)
    with pytest.raises(DegenerateDictionaryError):
        ols_select(values, labels, 2)


def test_step1_matches_best_single_feature_least_squares():
    values, labels = synthetic_features(n=40, p=8, seed=6)
    state = ols_select(values, labels, 1)
    for cls, sel in zip(state.classes, state.per_class):
        y = (labels == cls).astype(float)
        best_idx, best_res = None, np.inf
        for p_idx in range(1, values.shape[1]):
            design = np.stack([np.ones(len(y)), values[:, p_idx]], axis=1)
            res = y - design @ np.linalg.lstsq(design, y, rcond=None)[0]
            rss = float(res @ res)
            if rss < best_res - 1e-12:
                best_idx, best_res = p_idx, rss
        assert sel.indices[0] == best_idx
        assert sel.residuals[-1] == pytest.approx(best_res, abs=1e-8)


def test_residual_identity_and_monotonicity():
    values, labels = synthetic_features(n=80, p=15, seed=7)
    state = ols_select(values, labels, 6)
    for cls, sel in zip(state.classes, state.per_class):
        y = (labels == cls).astype(float)
        energy = float(y @ y)
        partial = energy
        for alpha, res in zip(sel.alphas, sel.residuals):
            partial -= alpha**2
            assert res == pytest.approx(partial, abs=1e-8)
        assert all(
            sel.residuals[k + 1] <= sel.residuals[k] + 1e-10 for k in range(len(sel.residuals) - 1)
        )
        # identity against a direct refit on the selected orthonormal features
        z = values @ sel.weights
        direct = y - np.full(len(y), y.mean())
        proj = z @ (z.T @ y)
        assert float(((direct - proj) ** 2).sum()) == pytest.approx(sel.residuals[-1], abs=1e-8)


def test_selected_features_are_decorrelated_unit_norm():
    values, labels = synthetic_features(n=100, p=20, seed=8)
    state = ols_select(values, labels, 5)
    for sel in state.per_class:
        z = values @ sel.weights
        gram = z.T @ z
        assert np.abs(gram - np.eye(gram.shape[0])).max() <= 1e-8


def test_selection_scale_robustness_and_determinism():
    values, labels = synthetic_features(n=50, p=10, seed=9)
    state = ols_select(values, labels, 4)
    scaled = ols_select(values * 7.5, labels, 4)
    for a, b in zip(state.per_class, scaled.per_class):
        assert a.indices == b.indices
    again = ols_select(values, labels, 4)
    for a, b in zip(state.per_class, again.per_class):
        assert a.indices == b.indices
        assert a.alphas == b.alphas


def test_ols_preconditions():
    values, labels = synthetic_features(n=30, p=6)
    with pytest.raises(ValueError):
        ols_select(values, np.zeros(30, dtype=int), 2)  # one class
    with pytest.raises(ValueError):
        ols_select(values, labels, 0)
    with pytest.raises(ValueError):
        ols_select(values, labels, 30)
    with pytest.raises(DimensionMismatchError):
        ols_select(values, labels[:-1], 2)


def test_unit_normalize_rows():
    z, flags = unit_normalize_rows(np.array([[3.0, 4.0]]))
    assert np.allclose(z, [[0.6, 0.8]])
    assert not flags[0]
    unit = np.array([[1.0, 0.0]])
    z2, _ = unit_normalize_rows(unit)
    assert np.array_equal(z2, unit)
    rng = np.random.default_rng(10)
    z3, flags3 = unit_normalize_rows(rng.normal(size=(6, 9)))
    assert np.abs(np.linalg.norm(z3, axis=1) - 1).max() <= 1e-12
    z4, flags4 = unit_normalize_rows(np.zeros((2, 3)))
    assert np.array_equal(z4, np.zeros((2, 3)))
    assert flags4.all()


def two_clouds(n_per=20, sep=4.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per, 2)) * 0.3
    b = rng.normal(size=(n_per, 2)) * 0.3 + sep
    features = np.vstack([a, b])
    labels = np.array([0] * n_per + [1] * n_per)
    return features, labels


def test_kernel_classifier_separable_clouds():
    features, labels = two_clouds()
    clf = fit_kernel_classifier(features, labels, bandwidth=1.0, regularization=1e-3)
    assert np.array_equal(clf.predict(features), labels)


def test_kernel_classifier_huge_regularization_degenerates_to_priors():
    rng = np.random.default_rng(11)
    features = rng.normal(size=(30, 3))
    labels = np.array([0] * 20 + [1] * 10)  # class 0 has the larger prior
    clf = fit_kernel_classifier(features, labels, bandwidth=50.0, regularization=1e9)
    assert np.abs(clf.dual).max() <= 1e-6
    assert (clf.predict(rng.normal(size=(10, 3))) == 0).all()


def test_kernel_classifier_tie_breaks_to_smallest_class():
    from haarscatter import GaussianKernelClassifier

    # Hand-built duals that give exactly equal per-class scores everywhere.
    clf = GaussianKernelClassifier(
        bandwidth=1.0,
        regularization=0.0,
        classes=(3, 7),
        train_features=np.array([[0.0], [2.0]]),
        dual=np.array([[0.5, 0.5], [0.5, 0.5]]),
    )
    midpoint = np.array([[1.0]])
    scores = clf.scores(midpoint)
    assert scores[0, 0] == scores[0, 1]
    assert clf.predict(midpoint)[0] == 3


def test_kernel_classifier_singular_system():
    features = np.zeros((6, 2))  # identical rows: Gram is all-ones, singular
    labels = np.array([0, 1, 0, 1, 0, 1])
    with pytest.raises(SingularSystemError):
        fit_kernel_classifier(features, labels, regularization=0.0)


def test_kernel_classifier_matches_qp_svm_reference():
    cvxopt = pytest.importorskip("cvxopt")
    from cvxopt import matrix, solvers

    solvers.options["show_progress"] = False
    features, labels = two_clouds(n_per=10, sep=2.5, seed=12)
    z, _ = unit_normalize_rows(features)
    signs = np.where(labels == 1, 1.0, -1.0)
    sq = ((z**2).sum(1)[:, None] + (z**2).sum(1)[None, :] - 2 * z @ z.T)
    kernel = np.exp(-np.maximum(sq, 0) / 2.0)
    n = len(signs)
    c_box = 10.0
    qp = solvers.qp(
        matrix(np.outer(signs, signs) * kernel),
        matrix(-np.ones(n)),
        matrix(np.vstack([-np.eye(n), np.eye(n)])),
        matrix(np.concatenate([np.zeros(n), np.full(n, c_box)])),
        matrix(signs[None, :]),
        matrix(np.zeros(1)),
    )
    alphas = np.array(qp["x"]).ravel()
    support = (alphas > 1e-6) & (alphas < c_box - 1e-6)
    bias = np.mean(signs[support] - (alphas * signs) @ kernel[:, support])
    svm_pred = np.where((alphas * signs) @ kernel + bias >= 0, 1, 0)

    clf = fit_kernel_classifier(z, labels, bandwidth=1.0, regularization=1e-3)
    agreement = np.mean(clf.predict(z) == svm_pred)
    assert agreement >= 0.95
