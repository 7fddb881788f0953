import json

import numpy as np
import pytest

from mcsga import classifiers as clf
from mcsga.classifiers import (
    ClassifierError,
    ClassifierKind,
    KNearestParams,
    LogisticRegressionParams,
    NaiveBayesParams,
    RandomForestParams,
    SvmRadialParams,
    make_params,
)
from mcsga.dataset import SynthSpec, generate_synthetic, split_train_validation
from mcsga.metrics import auc, roc_curve

MID = {
    ClassifierKind.RANDOM_FOREST: RandomForestParams(mtry=5, n_trees=100),
    ClassifierKind.SVM_RADIAL: SvmRadialParams(sigma=0.05, c=1.0),
    ClassifierKind.K_NEAREST: KNearestParams(k=17),
    ClassifierKind.LOGISTIC_REGRESSION: LogisticRegressionParams(decay=0.0),
    ClassifierKind.NAIVE_BAYES: NaiveBayesParams(fl=0.0, use_kernel=True),
}


@pytest.mark.parametrize("kind", list(ClassifierKind))
def test_confidence_range_and_determinism(kind, small_split):
    train, val, _ = small_split
    a = clf.fit(kind, MID[kind], train, seed=3)
    b = clf.fit(kind, MID[kind], train, seed=3)
    ca, cb = a.confidence(val.X), b.confidence(val.X)
    assert np.all((ca >= 0) & (ca <= 1))
    assert np.array_equal(ca, cb)
    assert isinstance(a.confidence(val.X[0]), float)
    assert auc(roc_curve(ca, val.y)) > 0.8


@pytest.mark.parametrize("kind", list(ClassifierKind))
def test_row_order_does_not_matter(kind, small_split):
    train, val, _ = small_split
    perm = np.random.default_rng(0).permutation(len(train))
    a = clf.fit(kind, MID[kind], train, seed=1)
    b = clf.fit(kind, MID[kind], (train.X[perm], train.y[perm]), seed=1)
    assert np.array_equal(a.confidence(val.X), b.confidence(val.X))


@pytest.mark.parametrize("kind", list(ClassifierKind))
def test_serialization_round_trip(kind, small_split, tmp_path):
    train, val, _ = small_split
    m = clf.fit(kind, MID[kind], train, seed=0)
    clf.save_model(m, tmp_path / "m.json")
    back = clf.load_model(tmp_path / "m.json")
    assert back.kind is kind and back.params == m.params
    assert np.array_equal(back.confidence(val.X), m.confidence(val.X))
    assert json.loads(clf.dumps_model(m))["format"] == "mcsga-model/1"


@pytest.mark.parametrize(
    "kind", [ClassifierKind.K_NEAREST, ClassifierKind.SVM_RADIAL, ClassifierKind.LOGISTIC_REGRESSION]
)
def test_standardization_invariance(kind, small_split):
    train, val, _ = small_split
    scale = np.linspace(0.5, 20, train.n_attr)
    shift = np.linspace(-3, 7, train.n_attr)
    a = clf.fit(kind, MID[kind], train, seed=0)
    b = clf.fit(kind, MID[kind], (train.X * scale + shift, train.y), seed=0)
    np.testing.assert_allclose(a.confidence(val.X), b.confidence(val.X * scale + shift), atol=1e-6)
    assert np.array_equal(a.predict(val.X), b.predict(val.X * scale + shift))


def test_knn_k1_recovers_training_labels(small_split):
    train, _, _ = small_split
    m = clf.fit(ClassifierKind.K_NEAREST, KNearestParams(k=1), train)
    assert np.array_equal(m.confidence(train.X), (train.y == 1).astype(float))


def test_knn_counting_and_ties():
    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    y = np.array([1, 1, -1, -1])
    m = clf.fit(ClassifierKind.K_NEAREST, KNearestParams(k=3), (X, y))
    assert m.confidence(np.array([0.5])) == pytest.approx(2 / 3)
    # query at 1.5: distances 1.5, .5, .5, 8.5 -> k=1 picks up both tied points
    m1 = clf.fit(ClassifierKind.K_NEAREST, KNearestParams(k=1), (X, y))
    assert m1.confidence(np.array([1.5])) == pytest.approx(0.5)


def test_knn_brute_force_oracle(small_split):
    train, val, _ = small_split
    m = clf.fit(ClassifierKind.K_NEAREST, KNearestParams(k=7), train)
    Z, Q = m.scaler.transform(train.X), m.scaler.transform(val.X[:50])
    for q, c in zip(Q, m.confidence(val.X[:50])):
        d = np.sum((Z - q) ** 2, axis=1)
        kth = np.sort(d)[6]
        near = d <= kth + 1e-9
        assert c == pytest.approx(np.mean(train.y[near] == 1))


def _walk(doc, x):
    st = doc["state"]
    votes = 0
    for root in st["roots"]:
        node = root
        while st["feature"][node] >= 0:
            f = st["feature"][node]
            node = st["left"][node] if x[f] <= st["threshold"][node] else st["right"][node]
        votes += st["value"][node] >= 0.5
    return votes


def test_forest_vote_recount(small_split):
    train, val, _ = small_split
    m = clf.fit(ClassifierKind.RANDOM_FOREST, RandomForestParams(mtry=3, n_trees=100), train, seed=2)
    doc = json.loads(clf.dumps_model(m))
    Z = m.scaler.transform(val.X[:40])
    expected = np.array([_walk(doc, z) for z in Z]) / 100
    assert np.array_equal(m.confidence(val.X[:40]), expected)


def test_forest_leaves_respect_min_node_size(small_split):
    train, _, _ = small_split
    m = clf.fit(ClassifierKind.RANDOM_FOREST, RandomForestParams(mtry=3, n_trees=5, min_node_size=5), train)
    # a split node always has two children; leaves store class fractions
    inner = m.feature >= 0
    assert np.all(m.left[inner] >= 0) and np.all(m.right[inner] >= 0)
    assert np.all((m.value >= 0) & (m.value <= 1))


def test_logistic_separable_toy():
    X = np.array([[0, 0], [1, 0], [0, 1], [3, 3], [4, 3], [3, 4]], float)
    y = np.array([-1, -1, -1, 1, 1, 1])
    m = clf.fit(ClassifierKind.LOGISTIC_REGRESSION, LogisticRegressionParams(decay=0.0), (X, y))
    assert np.array_equal(m.predict(X), y)


def test_naive_bayes_symmetry():
    X = np.array([[0.0], [1.0], [0.0], [1.0]])
    y = np.array([1, 1, -1, -1])
    for kernel in (True, False):
        m = clf.fit(ClassifierKind.NAIVE_BAYES, NaiveBayesParams(fl=0.0, use_kernel=kernel), (X, y))
        assert m.confidence(np.array([[0.3], [5.0]])) == pytest.approx([0.5, 0.5])


def test_naive_bayes_constant_attribute():
    X = np.column_stack([np.r_[np.zeros(5), np.ones(5)], np.full(10, 2.0)])
    y = np.array([-1] * 5 + [1] * 5)
    m = clf.fit(ClassifierKind.NAIVE_BAYES, NaiveBayesParams(use_kernel=False), (X, y))
    c = m.confidence(X)
    assert np.all(np.isfinite(c)) and c[-1] > 0.99 and c[0] < 0.01


def test_predict_threshold_rules(small_split):
    train, val, _ = small_split
    m = clf.fit(ClassifierKind.LOGISTIC_REGRESSION, LogisticRegressionParams(), train)
    c = m.confidence(val.X)
    assert np.array_equal(m.predict(val.X, 0.5), np.where(c >= 0.5, 1, -1))
    assert np.all(m.predict(val.X[c < 1], 1.0) == -1)
    with pytest.raises(ClassifierError):
        m.predict(val.X, 1.5)
    with pytest.raises(ClassifierError):
        m.confidence(val.X[:, :3])


def test_predict_boundary():
    # k=2 with one neighbour of each class gives exactly 0.5
    m = clf.fit(ClassifierKind.K_NEAREST, KNearestParams(k=2), (np.array([[0.0], [2.0]]), np.array([1, -1])))
    assert m.confidence(np.array([1.0])) == 0.5
    assert m.predict(np.array([1.0]), 0.5) == 1
    m7 = clf.fit(ClassifierKind.K_NEAREST, KNearestParams(k=1), (np.array([[0.0], [2.0]]), np.array([1, -1])))
    assert m7.predict(np.array([0.1]), 0.5) == 1


def test_param_validation():
    with pytest.raises(ClassifierError):
        make_params("KNearest", k=0)
    with pytest.raises(ClassifierError):
        SvmRadialParams(sigma=-1.0)
    with pytest.raises(ClassifierError):
        clf.fit(ClassifierKind.K_NEAREST, KNearestParams(k=3), (np.zeros((4, 1)), np.array([1, 1, 1, 1])))
    assert make_params(ClassifierKind.K_NEAREST, k=5) == KNearestParams(k=5)
    assert ClassifierKind.parse("RandomForest") is ClassifierKind.RANDOM_FOREST


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(ClassifierKind))
def test_sanity_floor_separable(kind):
    d = generate_synthetic(SynthSpec(n_instances=2000, class_separation=4.0, seed=0))
    s = split_train_validation(d, 0.8, 0)
    m = clf.fit(kind, MID[kind], s.train, seed=0)
    assert auc(roc_curve(m.confidence(s.validation.X), s.validation.y)) > 0.9


def test_no_signal_is_chance():
    d = generate_synthetic(SynthSpec(n_instances=2000, positive_rate=0.5, class_separation=0.0, seed=3))
    s = split_train_validation(d, 0.8, 0)
    m = clf.fit(ClassifierKind.LOGISTIC_REGRESSION, LogisticRegressionParams(), s.train)
    assert abs(auc(roc_curve(m.confidence(s.validation.X), s.validation.y)) - 0.5) < 0.06
