"""Confusion statistics, ROC/AUC, partial AUC over a specificity window and a
paired bootstrap test for the difference of two partial AUCs."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text
from ._kernels import window_area


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricReport:
    """Confusion-matrix ratios; a field is ``None`` when its denominator is zero."""

    sensitivity: float | None
    specificity: float | None
    accuracy: float | None
    precision: float | None

    @property
    def precision_undefined(self) -> bool:
        return self.precision is None


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def __eq__(self, other):
        if not isinstance(other, RocCurve):
            return NotImplemented
        return (
            np.array_equal(self.fpr, other.fpr)
            and np.array_equal(self.tpr, other.tpr)
            and np.array_equal(self.thresholds, other.thresholds)
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("threshold,fpr,tpr\n")
        for t, x, y in zip(self.thresholds, self.fpr, self.tpr):
            buf.write(f"{float(t)!r},{float(x)!r},{float(y)!r}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        atomic_write_text(path, self.to_csv())


@dataclass(frozen=True)
class PaucValue:
    raw_area: float
    normalized: float
    spec_lo: float
    spec_hi: float


def _as_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if not np.all((y == 1) | (y == -1)):
        raise MetricsError("labels must be -1 or +1")
    return y.astype(np.int8)


def confusion(predictions, labels) -> ConfusionCounts:
    p = _as_labels(predictions)
    y = _as_labels(labels)
    if len(p) != len(y):
        raise MetricsError(f"length mismatch: {len(p)} predictions, {len(y)} labels")
    if len(p) == 0:
        raise MetricsError("no instances to score")
    return ConfusionCounts(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == -1) & (p == 1))),
        fn=int(np.sum((y == 1) & (p == -1))),
        tn=int(np.sum((y == -1) & (p == -1))),
    )


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def report(counts: ConfusionCounts) -> MetricReport:
    c = counts
    return MetricReport(
        sensitivity=_ratio(c.tp, c.tp + c.fn),
        specificity=_ratio(c.tn, c.tn + c.fp),
        accuracy=_ratio(c.tp + c.tn, c.tp + c.fp + c.fn + c.tn),
        precision=_ratio(c.tp, c.tp + c.fp),
    )


def roc_curve(scores, labels) -> RocCurve:
    """ROC with one vertex per distinct score, highest threshold first.

    Vertex ``i`` is the operating point of the rule ``score >= thresholds[i]``;
    the leading ``inf`` threshold gives (0, 0).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _as_labels(labels)
    if len(s) != len(y):
        raise MetricsError(f"length mismatch: {len(s)} scores, {len(y)} labels")
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("ROC needs at least one positive and one negative instance")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    is_pos = (y[order] == 1).astype(np.int64)
    last_of_group = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tp = np.cumsum(is_pos)[last_of_group]
    fp = np.cumsum(1 - is_pos)[last_of_group]
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, s_sorted[last_of_group]]
    return RocCurve(fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    x, y = curve.fpr, curve.tpr
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def _check_window(spec_lo, spec_hi):
    if not (0.0 <= spec_lo < spec_hi <= 1.0):
        raise MetricsError(f"invalid specificity window [{spec_lo}, {spec_hi}]")


def partial_auc(curve: RocCurve, spec_lo: float = 0.9, spec_hi: float = 1.0) -> PaucValue:
    """Area under the ROC for specificity in ``[spec_lo, spec_hi]``.

    Specificity ``s`` corresponds to ``fpr = 1 - s``; the curve is linearly
    interpolated where the window cuts a segment.
    """
    _check_window(spec_lo, spec_hi)
    lo, hi = 1.0 - spec_hi, 1.0 - spec_lo
    x0, y0 = curve.fpr[:-1], curve.tpr[:-1]
    x1, y1 = curve.fpr[1:], curve.tpr[1:]
    live = (x1 > lo) & (x0 < hi) & (x1 > x0)
    x0, y0, x1, y1 = x0[live], y0[live], x1[live], y1[live]
    a = np.maximum(x0, lo)
    b = np.minimum(x1, hi)
    slope = (y1 - y0) / (x1 - x0)
    ya = y0 + slope * (a - x0)
    yb = y0 + slope * (b - x0)
    raw = float(np.sum((b - a) * (ya + yb) / 2.0))
    return PaucValue(raw, raw / (spec_hi - spec_lo), spec_lo, spec_hi)


def pauc_score(scores, labels, window=(0.9, 1.0)) -> float:
    """Normalized partial AUC straight from scores (compiled fast path)."""
    spec_lo, spec_hi = window
    _check_window(spec_lo, spec_hi)
    y = _as_labels(labels)
    raw = window_area(
        np.ascontiguousarray(scores, dtype=np.float64),
        np.ascontiguousarray(y == 1, dtype=np.int8),
        1.0 - spec_hi,
        1.0 - spec_lo,
    )
    if math.isnan(raw):
        raise MetricsError("partial AUC needs both classes present")
    return raw / (spec_hi - spec_lo)


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    p_value: float
    observed_difference: float
    differences: np.ndarray


def bootstrap_pauc_test(scores_a, scores_b, labels, window=(0.9, 1.0), n_boot: int = 1000, seed: int = 0) -> float:
    """p-value of the paired bootstrap comparison; see :func:`bootstrap_pauc_comparison`."""
    return bootstrap_pauc_comparison(scores_a, scores_b, labels, window, n_boot, seed).p_value


def bootstrap_pauc_comparison(
    scores_a,
    scores_b,
    labels,
    window=(0.9, 1.0),
    n_boot: int = 1000,
    seed: int = 0,
    max_retries: int = 100,
) -> BootstrapResult:
    """Two-sided paired bootstrap test of H0: pAUC(a) == pAUC(b).

    Instances are resampled with replacement, keeping the pairing between
    the two score columns. With ``d*`` the resampled pAUC differences the
    p-value is ``min(1, 2 * min(P(d* <= 0), P(d* >= 0)))``. Each resample
    draws from its own stream seeded by ``(seed, b)``.
    """
    a = np.ascontiguousarray(scores_a, dtype=np.float64)
    b = np.ascontiguousarray(scores_b, dtype=np.float64)
    y = _as_labels(labels)
    if not (len(a) == len(b) == len(y)):
        raise MetricsError("score columns and labels must have equal lengths")
    if n_boot < 100:
        raise MetricsError("n_boot must be at least 100")
    spec_lo, spec_hi = window
    _check_window(spec_lo, spec_hi)
    lo, hi = 1.0 - spec_hi, 1.0 - spec_lo
    width = spec_hi - spec_lo
    pos = np.ascontiguousarray(y == 1, dtype=np.int8)
    observed = (window_area(a, pos, lo, hi) - window_area(b, pos, lo, hi)) / width
    if math.isnan(observed):
        raise MetricsError("partial AUC needs both classes present")
    n = len(y)
    diffs = np.empty(n_boot)
    for rep in range(n_boot):
        rng = np.random.default_rng([seed, rep])
        for _ in range(max_retries):
            idx = rng.integers(0, n, n)
            p = pos[idx]
            if 0 < p.sum() < n:
                break
        else:
            raise MetricsError(f"bootstrap resample {rep} kept drawing a single class")
        diffs[rep] = (window_area(a[idx], p, lo, hi) - window_area(b[idx], p, lo, hi)) / width
    p_value = min(1.0, 2.0 * min(np.mean(diffs <= 0), np.mean(diffs >= 0)))
    return BootstrapResult(float(p_value), float(observed), diffs)
