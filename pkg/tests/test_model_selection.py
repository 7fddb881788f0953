import csv
import io
import json

import numpy as np
import pytest

from mcsga import classifiers as clf
from mcsga.classifiers import ClassifierKind, KNearestParams, LogisticRegressionParams
from mcsga.dataset import Dataset, FoldAssignment, SynthSpec, default_attribute_names, generate_synthetic, stratified_kfold
from mcsga.metrics import pauc_score
from mcsga.model_selection import (
    FoldError,
    GridSpec,
    cv_score,
    default_grid,
    default_grids,
    grid_report_csv,
    grid_search,
    write_grid_report,
)

LR = ClassifierKind.LOGISTIC_REGRESSION
KNN = ClassifierKind.K_NEAREST


def _data(n, sep, seed=0, rate=0.2):
    d = generate_synthetic(SynthSpec(n_instances=n, positive_rate=rate, n_attr=10, class_separation=sep, seed=seed))
    return d, stratified_kfold(d, 10, seed)


def test_separable_scores_near_one():
    d, f = _data(300, 20.0)
    assert cv_score(LR, LogisticRegressionParams(), d, f).mean > 0.98


def test_no_signal_near_half():
    d, f = _data(2000, 0.0, rate=0.5)
    # chance-level pAUC over [0.9, 1] is 0.1 normalized; full-window AUC is 0.5
    assert abs(cv_score(LR, LogisticRegressionParams(), d, f, window=(0.0, 1.0)).mean - 0.5) < 0.1
    assert abs(cv_score(LR, LogisticRegressionParams(), d, f).mean - 0.05) < 0.05


def test_knn_hand_enumeration():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    y = np.array([1, -1, -1, 1])
    d = Dataset(("a", "b", "c", "e"), X, y, default_attribute_names(1))
    folds = stratified_kfold(d, 2, 5)
    s = cv_score(KNN, KNearestParams(k=1), d, folds)
    for f in range(2):
        te, tr = folds.test_indices(f), folds.train_indices(f)
        conf = [float(y[tr][np.argmin(np.abs(X[tr, 0] - X[i, 0]))] == 1) for i in te]
        pos = conf[int(np.flatnonzero(y[te] == 1)[0])]
        neg = conf[int(np.flatnonzero(y[te] == -1)[0])]
        # one positive and one negative: pAUC is 1 if ranked right, 0.05 on a tie, 0 if inverted
        expected = 1.0 if pos > neg else (0.05 if pos == neg else 0.0)
        assert s.fold_scores[f] == pytest.approx(expected)


def test_fold_scores_match_monolithic():
    d, f = _data(300, 3.0, seed=1)
    s = cv_score(KNN, KNearestParams(k=5), d, f, seed=4)
    for i in range(10):
        tr, te = f.train_indices(i), f.test_indices(i)
        m = clf.fit(KNN, KNearestParams(k=5), (d.X[tr], d.y[tr]), seed=4 + i)
        assert s.fold_scores[i] == pauc_score(m.confidence(d.X[te]), d.y[te])
    assert s.mean == pytest.approx(np.mean(s.fold_scores))


def test_permutation_invariance():
    d, f = _data(300, 3.0, seed=2)
    perm = np.random.default_rng(0).permutation(len(d))
    dp = d.subset(perm)
    fp = FoldAssignment(f.k, f.fold_of[perm])
    for kind, params in [(KNN, KNearestParams(k=7)), (LR, LogisticRegressionParams(decay=0.1))]:
        assert cv_score(kind, params, d, f).fold_scores == cv_score(kind, params, dp, fp).fold_scores


def test_single_point_and_dominance():
    d, f = _data(300, 4.0, seed=3)
    one = GridSpec.from_dict(KNN, {"k": (9,)})
    best, scores = grid_search(one, d, f)
    assert best == KNearestParams(k=9) and len(scores) == 1
    # K beyond the training size votes every row: a constant, uninformative score
    spec = GridSpec.from_dict(KNN, {"k": (999, 5)})
    best, scores = grid_search(spec, d, f)
    assert best.k == 5
    assert all(a > b for a, b in zip(scores[1].fold_scores, scores[0].fold_scores))
    assert all(scores[1].mean >= s.mean for s in scores)


def test_tie_break_first_in_enumeration():
    d, f = _data(200, 3.0, seed=4)
    # K=1 and K=1 duplicated under another name is impossible, so use two grids with identical results
    spec = GridSpec.from_dict(KNN, {"k": (3, 3)})
    best, scores = grid_search(spec, d, f)
    assert scores[0].mean == scores[1].mean and best is scores[0].params


def test_grid_enumeration_order_and_defaults():
    spec = GridSpec.from_dict(ClassifierKind.SVM_RADIAL, {"sigma": (0.1, 0.2), "c": (1.0, 2.0, 3.0)})
    pts = spec.points()
    assert len(spec) == 6 and [(p.sigma, p.c) for p in pts[:3]] == [(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]
    g = default_grids()
    assert len(g[ClassifierKind.RANDOM_FOREST]) == 30
    assert len(g[ClassifierKind.SVM_RADIAL]) == 400
    assert len(g[KNN]) == 50 and g[KNN].points()[-1].k == 99
    assert len(g[LR]) == 6 and len(g[ClassifierKind.NAIVE_BAYES]) == 6
    sig = dict(default_grid(ClassifierKind.SVM_RADIAL).axes)["sigma"]
    assert max(sig) == 1.0 and min(sig) > 0
    with pytest.raises(ValueError):
        GridSpec.from_dict(KNN, {"k": ()})


def test_grid_report_parses(tmp_path):
    d, f = _data(200, 3.0, seed=5)
    _, scores = grid_search(GridSpec.from_dict(KNN, {"k": (1, 3)}), d, f)
    write_grid_report(tmp_path / "g.csv", KNN, scores)
    rows = list(csv.reader(io.StringIO((tmp_path / "g.csv").read_text())))
    assert rows[0] == ["kind", "param_json"] + [f"fold_{i}" for i in range(1, 11)] + ["mean"]
    assert json.loads(rows[1][1]) == {"k": 1}
    assert float(rows[2][-1]) == scores[1].mean
    assert grid_report_csv(KNN, scores) == (tmp_path / "g.csv").read_text()


def test_fold_error_names_fold():
    d, _ = _data(100, 3.0, seed=6)
    fold_of = np.arange(len(d)) % 2
    fold_of[np.flatnonzero(d.y == -1)[:5]] = 2  # fold 2 holds negatives only
    with pytest.raises(FoldError, match="fold 2"):
        cv_score(LR, LogisticRegressionParams(), d, FoldAssignment(3, fold_of))
