import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_roc, pairwise_auc, riemann_pauc
from mcsga.metrics import (
    ConfusionCounts,
    MetricsError,
    auc,
    bootstrap_pauc_comparison,
    bootstrap_pauc_test,
    confusion,
    partial_auc,
    pauc_score,
    report,
    roc_curve,
)


def _random_set(rng, n=None, ties=False):
    n = n or int(rng.integers(4, 51))
    y = rng.choice([-1, 1], n)
    y[0], y[1] = 1, -1
    s = rng.integers(0, 6, n).astype(float) if ties else rng.random(n)
    return s, y


def test_confusion_examples():
    assert confusion([1, -1], [1, -1]) == ConfusionCounts(tp=1, fp=0, fn=0, tn=1)
    assert confusion([1, 1], [-1, -1]).fp == 2
    rng = np.random.default_rng(0)
    p, y = rng.choice([-1, 1], 50), rng.choice([-1, 1], 50)
    c = confusion(p, y)
    assert c.total == 50
    assert c.tp == sum(1 for a, b in zip(p, y) if a == 1 and b == 1)


def test_confusion_rejects_bad_labels():
    with pytest.raises(MetricsError):
        confusion([1, 0], [1, -1])
    with pytest.raises(MetricsError):
        confusion([1], [1, -1])


def test_report_examples():
    r = report(ConfusionCounts(tp=3, fp=1, fn=2, tn=4))
    assert (r.sensitivity, r.specificity, r.accuracy, r.precision) == (0.6, 0.8, 0.7, 0.75)
    r = report(ConfusionCounts(tp=1, fp=0, fn=0, tn=1))
    assert (r.sensitivity, r.specificity, r.accuracy, r.precision) == (1.0, 1.0, 1.0, 1.0)
    r = report(ConfusionCounts(tp=0, fp=0, fn=3, tn=3))
    assert r.precision_undefined and r.precision is None


def test_roc_hand_example():
    c = roc_curve([0.9, 0.8, 0.3, 0.2], [1, 1, -1, -1])
    assert c.points == [(0, 0), (0, 0.5), (0, 1), (0.5, 1), (1, 1)]
    assert c.thresholds[0] == np.inf


def test_roc_all_equal():
    assert roc_curve([0.4] * 5, [1, -1, 1, -1, -1]).points == [(0, 0), (1, 1)]
    assert auc(roc_curve([0.4] * 5, [1, -1, 1, -1, -1])) == 0.5


def test_roc_needs_both_classes():
    with pytest.raises(MetricsError):
        roc_curve([0.1, 0.2], [1, 1])
    with pytest.raises(MetricsError):
        pauc_score([0.1, 0.2], [-1, -1])


def test_roc_matches_brute_force_and_mirrors():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s, y = _random_set(rng, ties=bool(rng.integers(2)))
        c = roc_curve(s, y)
        np.testing.assert_allclose(np.column_stack([c.fpr, c.tpr]), brute_roc(s, y))
        m = roc_curve(-s, y)
        # negated scores swap the roles of the classes: tpr' = 1 - fpr reversed
        np.testing.assert_allclose(auc(m), 1 - auc(c), atol=1e-12)


def test_auc_perfect_and_pairwise():
    assert auc(roc_curve([0.9, 0.8, 0.1], [1, 1, -1])) == 1.0
    rng = np.random.default_rng(2)
    for _ in range(50):
        s, y = _random_set(rng, 30, ties=True)
        assert abs(auc(roc_curve(s, y)) - pairwise_auc(s, y)) <= 1e-12


def test_pauc_perfect_and_inverted():
    s, y = [0.9, 0.8, 0.2, 0.1], [1, 1, -1, -1]
    p = partial_auc(roc_curve(s, y))
    assert p.raw_area == pytest.approx(0.1) and p.normalized == pytest.approx(1.0)
    assert partial_auc(roc_curve(s, [-1, -1, 1, 1])).raw_area == 0.0
    assert pauc_score(s, y) == pytest.approx(1.0)


def test_pauc_riemann_oracle_n40():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s, y = _random_set(rng, 40, ties=bool(rng.integers(2)))
        assert abs(partial_auc(roc_curve(s, y)).raw_area - riemann_pauc(s, y)) < 1e-4


def test_pauc_full_window_is_auc_and_fast_path_agrees():
    rng = np.random.default_rng(4)
    for _ in range(50):
        s, y = _random_set(rng, ties=bool(rng.integers(2)))
        c = roc_curve(s, y)
        assert partial_auc(c, 0.0, 1.0).raw_area == pytest.approx(auc(c), abs=1e-12)
        for lo, hi in [(0.9, 1.0), (0.5, 0.8), (0.0, 1.0)]:
            assert pauc_score(s, y, (lo, hi)) == pytest.approx(partial_auc(c, lo, hi).normalized, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 8), st.booleans()), min_size=2, max_size=40),
    st.floats(0, 0.5),
    st.floats(0, 0.5),
)
def test_pauc_monotone_in_window(rows, shrink_lo, shrink_hi):
    s = np.array([r[0] for r in rows], float)
    y = np.array([1 if r[1] else -1 for r in rows])
    if len(set(y.tolist())) < 2:
        return
    c = roc_curve(s, y)
    inner = partial_auc(c, shrink_lo / 2, 1 - shrink_hi / 2 if shrink_hi else 1.0)
    outer = partial_auc(c, 0.0, 1.0)
    assert inner.raw_area <= outer.raw_area + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 50), st.booleans()), min_size=2, max_size=40))
def test_roc_invariant_to_increasing_transform(rows):
    s = np.array([r[0] for r in rows], float)
    y = np.array([1 if r[1] else -1 for r in rows])
    if len(set(y.tolist())) < 2:
        return
    # integer scores keep the cubic map exact in floating point
    a, b = roc_curve(s, y), roc_curve(3 * s**3 + s + 1, y)
    assert np.array_equal(a.fpr, b.fpr) and np.array_equal(a.tpr, b.tpr)
    assert np.all(np.diff(a.fpr) >= 0) and np.all(np.diff(a.tpr) >= 0)


def test_invalid_window():
    with pytest.raises(MetricsError):
        partial_auc(roc_curve([1, 0], [1, -1]), 0.9, 0.9)


def test_roc_csv(tmp_path):
    c = roc_curve([0.9, 0.1], [1, -1])
    c.write_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines() == ["threshold,fpr,tpr", "inf,0.0,0.0", "0.9,0.0,1.0", "0.1,1.0,1.0"]


def test_bootstrap_identical_and_planted():
    rng = np.random.default_rng(5)
    y = rng.choice([-1, 1], 400)
    s = rng.random(400)
    assert bootstrap_pauc_test(s, s, y, n_boot=1000, seed=0) >= 0.95
    perfect = (y == 1).astype(float)
    assert bootstrap_pauc_test(perfect, s, y, n_boot=1000, seed=0) < 0.05


def test_bootstrap_reproducible_and_validated():
    rng = np.random.default_rng(6)
    y = rng.choice([-1, 1], 100)
    a, b = rng.random(100), rng.random(100)
    r1 = bootstrap_pauc_comparison(a, b, y, n_boot=200, seed=3)
    r2 = bootstrap_pauc_comparison(a, b, y, n_boot=200, seed=3)
    assert r1.p_value == r2.p_value and np.array_equal(r1.differences, r2.differences)
    assert 0 <= r1.p_value <= 1
    with pytest.raises(MetricsError):
        bootstrap_pauc_test(a, b, y, n_boot=10)


def test_report_exhaustive_small():
    for tp, fp, fn, tn in itertools.product(range(4), repeat=4):
        r = report(ConfusionCounts(tp, fp, fn, tn))
        assert r.sensitivity == (tp / (tp + fn) if tp + fn else None)
        assert r.precision == (tp / (tp + fp) if tp + fp else None)
