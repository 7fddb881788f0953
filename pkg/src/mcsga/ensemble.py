"""Weighted multiple classifier system.

Out-of-fold confidences of the base classifiers are cached once; the GA
then searches weight vectors against that matrix, and the ensemble labels
a pair positive when the weighted confidence sum reaches the threshold.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifiers as clf
from ._io import atomic_write_text, dump_json, load_json
from ._kernels import fold_pauc_batch
from .classifiers import ClassifierKind, HyperParams, TrainedModel
from .dataset import Dataset, FoldAssignment
from .ga import GaConfig, GaResult, run_ga
from .metrics import MetricsError
from .model_selection import FoldError

log = logging.getLogger(__name__)

KIND_ORDER = tuple(ClassifierKind)


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConfidenceMatrix:
    """n x m out-of-fold confidences, one column per classifier kind."""

    values: np.ndarray
    folds: FoldAssignment
    labels: np.ndarray
    kinds: tuple[ClassifierKind, ...] = KIND_ORDER

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] != len(self.labels) or v.shape[0] != len(self.folds):
            raise EnsembleError("confidence matrix, labels and folds disagree in size")
        if v.shape[1] != len(self.kinds):
            raise EnsembleError("one column per classifier kind expected")
        if np.any(~np.isfinite(v)) or v.min(initial=0.0) < 0 or v.max(initial=0.0) > 1:
            raise EnsembleError("confidences must lie in [0, 1]")
        v.flags.writeable = False
        y = np.array(self.labels, dtype=np.int8, copy=True)
        y.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "kinds", tuple(ClassifierKind.parse(k) for k in self.kinds))

    @property
    def n_classifiers(self) -> int:
        return self.values.shape[1]

    def column(self, kind) -> np.ndarray:
        return self.values[:, self.kinds.index(ClassifierKind.parse(kind))]

    def fold_layout(self):
        """Rows grouped by fold (stable) and the fold boundary offsets."""
        order = np.argsort(self.folds.fold_of, kind="stable")
        offsets = np.r_[0, np.cumsum(self.folds.fold_sizes())].astype(np.intp)
        return order, offsets

    def normalized(self) -> tuple["ConfidenceMatrix", np.ndarray, np.ndarray]:
        """Per-column min-max rescaling; also returns the (lo, hi) used."""
        lo = self.values.min(axis=0)
        hi = self.values.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        return ConfidenceMatrix((self.values - lo) / span, self.folds, self.labels, self.kinds), lo, hi

    def to_csv(self) -> str:
        head = ",".join(["fold", "label", *(k.label for k in self.kinds)])
        lines = [head]
        for f, y, row in zip(self.folds.fold_of, self.labels, self.values):
            lines.append(",".join([str(int(f)), str(int(y)), *(repr(float(v)) for v in row)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, path, k: int | None = None) -> "ConfidenceMatrix":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        kinds = tuple(ClassifierKind.parse(h) for h in header[2:])
        fold_of = np.array([int(r[0]) for r in rows], dtype=np.intp)
        labels = np.array([int(r[1]) for r in rows], dtype=np.int8)
        values = np.array([[float(v) for v in r[2:]] for r in rows], dtype=np.float64).reshape(len(rows), len(kinds))
        k = int(fold_of.max()) + 1 if k is None else k
        return cls(values, FoldAssignment(k, fold_of), labels, kinds)


def build_confidence_matrix(
    data: Dataset,
    folds: FoldAssignment,
    params: list[HyperParams],
    seed: int = 0,
) -> ConfidenceMatrix:
    """Entry (j, i): classifier i fitted without fold_of(j), evaluated on row j.

    The fit for (classifier i, fold f) uses seed ``seed + 1000 * i + f``.
    """
    if len(folds) != len(data):
        raise EnsembleError("fold assignment does not match the dataset size")
    kinds = tuple(p.kind for p in params)
    values = np.empty((len(data), len(params)))
    for i, p in enumerate(params):
        for f in range(folds.k):
            tr, te = folds.train_indices(f), folds.test_indices(f)
            try:
                model = clf.fit(p.kind, p, (data.X[tr], data.y[tr]), seed=seed + 1000 * i + f)
                values[te, i] = model.confidence(data.X[te])
            except Exception as exc:
                raise FoldError(f, exc, p.kind) from exc
    return ConfidenceMatrix(values, folds, data.y, kinds)


def combined_score(confidences, weights) -> np.ndarray | float:
    """Weighted confidence sum; rows of a matrix are scored independently."""
    c = np.asarray(confidences, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if c.shape[-1] != w.shape[0]:
        raise EnsembleError(f"{c.shape[-1]} confidences but {w.shape[0]} weights")
    # explicit left-to-right sum: bitwise equal to the compiled fitness kernel
    s = np.zeros(c.shape[:-1])
    for i in range(w.shape[0]):
        s = s + w[i] * c[..., i]
    return float(s) if np.ndim(s) == 0 else s


class WeightFitness:
    """Cross-validated normalized pAUC of the weighted ensemble, evaluated on
    a fixed confidence matrix (no refitting). Callable on one weight vector or
    a (n, m) batch."""

    def __init__(self, matrix: ConfidenceMatrix, window=(0.9, 1.0)):
        spec_lo, spec_hi = window
        if not 0 <= spec_lo < spec_hi <= 1:
            raise MetricsError(f"invalid specificity window {window}")
        self.matrix = matrix
        self.window = (float(spec_lo), float(spec_hi))
        order, self.offsets = matrix.fold_layout()
        self.conf = np.ascontiguousarray(matrix.values[order])
        self.positive = np.ascontiguousarray(matrix.labels[order] == 1, dtype=np.int8)
        self.fpr_lo, self.fpr_hi = 1.0 - spec_hi, 1.0 - spec_lo
        sizes = np.diff(self.offsets)
        pos = np.add.reduceat(self.positive, self.offsets[:-1]) if len(sizes) else np.array([])
        self.valid_folds = (sizes > 0) & (pos > 0) & (pos < sizes)
        if not self.valid_folds.any():
            raise EnsembleError("no fold contains both classes")
        for f in np.flatnonzero(~self.valid_folds):
            log.warning("fold %d holds a single class; excluded from weight fitness", f)

    def per_fold(self, weights) -> np.ndarray:
        W = np.atleast_2d(np.ascontiguousarray(weights, dtype=np.float64))
        if W.shape[1] != self.conf.shape[1]:
            raise EnsembleError(f"expected {self.conf.shape[1]} weights, got {W.shape[1]}")
        return fold_pauc_batch(W, self.conf, self.positive, self.offsets, self.fpr_lo, self.fpr_hi)

    def __call__(self, weights):
        single = np.ndim(weights) == 1
        scores = self.per_fold(weights)[:, self.valid_folds].mean(axis=1)
        return float(scores[0]) if single else scores


def weight_fitness(weights, matrix: ConfidenceMatrix, window=(0.9, 1.0)) -> float:
    return WeightFitness(matrix, window)(np.asarray(weights, dtype=np.float64))


def tune_weights(matrix: ConfidenceMatrix, ga_config: GaConfig = GaConfig(), window=(0.9, 1.0), callback=None):
    """GA search over [0, 1]^m. Returns ``(weights, GaResult)``."""
    fitness = WeightFitness(matrix, window)
    result: GaResult = run_ga(fitness, ga_config, matrix.n_classifiers, bounds=(0.0, 1.0), vectorized=True,
                              callback=callback)
    return result.best.genes.copy(), result


def select_threshold(scores, labels, criterion: str = "accuracy") -> float:
    """Cut-point maximizing accuracy or Youden's J (sens + spec - 1).

    Candidates are the lowest score (all positive), midpoints between
    consecutive distinct scores, and the float just above the highest score
    (all negative); ties go to the smallest candidate. A single distinct
    score is its own cut.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if len(s) != len(y):
        raise EnsembleError("scores and labels differ in length")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == -1))
    if n_pos == 0 or n_neg == 0:
        raise EnsembleError("threshold selection needs both classes")
    if criterion not in ("accuracy", "youden"):
        raise EnsembleError(f"unknown threshold criterion {criterion!r}")
    u = np.unique(s)
    if len(u) == 1:
        return float(u[0])
    cand = np.r_[u[0], (u[:-1] + u[1:]) / 2.0, np.nextafter(u[-1], np.inf)]
    # positives/negatives at or above each candidate, via sorted counts
    pos_sorted = np.sort(s[y == 1])
    neg_sorted = np.sort(s[y == -1])
    tp = n_pos - np.searchsorted(pos_sorted, cand, side="left")
    fp = n_neg - np.searchsorted(neg_sorted, cand, side="left")
    if criterion == "accuracy":
        value = (tp + (n_neg - fp)) / (n_pos + n_neg)
    else:
        value = tp / n_pos + (n_neg - fp) / n_neg - 1.0
    return float(cand[int(np.argmax(value))])


@dataclass(eq=False)
class EnsembleModel:
    models: list[TrainedModel]
    weights: np.ndarray
    alpha: float
    window: tuple[float, float] = (0.9, 1.0)
    norm_lo: np.ndarray | None = None
    norm_hi: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.weights) != len(self.models):
            raise EnsembleError("one weight per base model expected")
        if np.any(self.weights < 0) or np.any(self.weights > 1):
            raise EnsembleError("weights must lie in [0, 1]")

    @property
    def kinds(self):
        return tuple(m.kind for m in self.models)

    def confidences(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        C = np.column_stack([m.confidence(X) for m in self.models])
        if self.norm_lo is not None:
            span = np.where(self.norm_hi > self.norm_lo, self.norm_hi - self.norm_lo, 1.0)
            C = np.clip((C - self.norm_lo) / span, 0.0, 1.0)
        return C

    def scores(self, X) -> np.ndarray:
        return combined_score(self.confidences(X), self.weights)

    def classify(self, x):
        x = np.asarray(x, dtype=np.float64)
        s = self.scores(x)
        labels = np.where(s >= self.alpha, 1, -1)
        return int(labels[0]) if x.ndim == 1 else labels

    def save(self, directory, extra_files: dict | None = None) -> None:
        """Write ``ensemble.json`` plus one model document per base classifier."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        names = []
        for i, m in enumerate(self.models, start=1):
            name = f"model_{i}_{m.kind.label}.json"
            clf.save_model(m, directory / name)
            names.append(name)
        meta = {
            "format": "mcsga-ensemble/1",
            "models": names,
            "kinds": [k.label for k in self.kinds],
            "weights": self.weights.tolist(),
            "alpha": self.alpha,
            "window": list(self.window),
            "normalization": None
            if self.norm_lo is None
            else {"lo": np.asarray(self.norm_lo).tolist(), "hi": np.asarray(self.norm_hi).tolist()},
            "metadata": self.metadata,
        }
        dump_json(directory / "ensemble.json", meta)
        for name, text in (extra_files or {}).items():
            atomic_write_text(directory / name, text)

    @classmethod
    def load(cls, directory) -> "EnsembleModel":
        directory = Path(directory)
        meta = load_json(directory / "ensemble.json")
        if meta.get("format") != "mcsga-ensemble/1":
            raise EnsembleError(f"{os.fspath(directory)} is not an ensemble bundle")
        models = [clf.load_model(directory / name) for name in meta["models"]]
        norm = meta.get("normalization")
        return cls(
            models,
            np.array(meta["weights"]),
            float(meta["alpha"]),
            tuple(meta["window"]),
            None if norm is None else np.array(norm["lo"]),
            None if norm is None else np.array(norm["hi"]),
            meta.get("metadata", {}),
        )


def classify(model: EnsembleModel, x):
    return model.classify(x)


def fit_ensemble(
    train: Dataset,
    folds: FoldAssignment,
    params: list[HyperParams],
    ga_config: GaConfig = GaConfig(),
    window=(0.9, 1.0),
    criterion: str = "accuracy",
    normalize: bool = False,
    seed: int = 0,
    matrix: ConfidenceMatrix | None = None,
):
    """Confidence matrix -> GA weights -> threshold -> full-data refits.

    Returns ``(EnsembleModel, ConfidenceMatrix, GaResult)``; the matrix is the
    raw (unnormalized) one.
    """
    if matrix is None:
        matrix = build_confidence_matrix(train, folds, params, seed)
    work, lo, hi = matrix.normalized() if normalize else (matrix, None, None)
    weights, result = tune_weights(work, ga_config, window)
    alpha = select_threshold(combined_score(work.values, weights), work.labels, criterion)
    models = [clf.fit(p.kind, p, train, seed=seed + 1000 * i + folds.k) for i, p in enumerate(params)]
    model = EnsembleModel(models, weights, alpha, tuple(window), lo, hi)
    return model, matrix, result
