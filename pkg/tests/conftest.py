import numpy as np
import pytest

from mcsga.dataset import SynthSpec, generate_synthetic, split_train_validation, stratified_kfold


def pairwise_auc(scores, labels):
    """P(s+ > s-) + 0.5 P(s+ == s-) over every positive/negative pair."""
    s = np.asarray(scores, float)
    y = np.asarray(labels)
    p, n = s[y == 1][:, None], s[y != 1][None, :]
    return float(np.mean((p > n) + 0.5 * (p == n)))


def brute_roc(scores, labels):
    """ROC vertices recomputed threshold by threshold from scratch."""
    s = np.asarray(scores, float)
    y = np.asarray(labels)
    pts = [(0.0, 0.0)]
    for t in sorted(set(s.tolist()), reverse=True):
        pred = s >= t
        pts.append((float(np.mean(pred[y != 1])), float(np.mean(pred[y == 1]))))
    return np.array(pts)


def riemann_pauc(scores, labels, spec_lo=0.9, spec_hi=1.0, step=1e-5):
    """Midpoint Riemann sum of the brute-force ROC over specificity."""
    pts = brute_roc(scores, labels)
    lo, hi = 1 - spec_hi, 1 - spec_lo
    grid = np.arange(lo + step / 2, hi, step)
    return float(np.sum(np.interp(grid, pts[:, 0], pts[:, 1])) * step)


@pytest.fixture(scope="session")
def small_data():
    return generate_synthetic(SynthSpec(n_instances=400, positive_rate=0.2, n_attr=10, class_separation=3.0, seed=1))


@pytest.fixture(scope="session")
def small_split(small_data):
    split = split_train_validation(small_data, 0.8, 0)
    return split.train, split.validation, stratified_kfold(split.train, 5, 0)


# acceptance criteria report: filled by test_acceptance, printed after the run
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
