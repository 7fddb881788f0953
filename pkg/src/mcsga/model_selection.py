"""Cross-validated partial-AUC scoring and exhaustive grid search."""

from __future__ import annotations

import io
import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import classifiers as clf
from ._io import atomic_write_text
from .classifiers import ClassifierKind, HyperParams, make_params
from .dataset import Dataset, FoldAssignment
from .metrics import MetricsError, pauc_score


class FoldError(RuntimeError):
    def __init__(self, fold: int, cause: Exception, kind=None):
        where = f"{ClassifierKind.parse(kind).label}, " if kind is not None else ""
        super().__init__(f"{where}fold {fold}: {cause}")
        self.fold = fold
        self.kind = kind
        self.__cause__ = cause


@dataclass(frozen=True)
class GridSpec:
    """Named candidate lists per hyperparameter; the grid is their Cartesian
    product, enumerated with the last axis varying fastest."""

    kind: ClassifierKind
    axes: tuple[tuple[str, tuple], ...]
    fixed: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ClassifierKind.parse(self.kind))
        axes = tuple((name, tuple(values)) for name, values in dict(self.axes).items())
        for name, values in axes:
            if not values:
                raise ValueError(f"grid axis {name!r} is empty")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "fixed", tuple(dict(self.fixed).items()))

    @classmethod
    def from_dict(cls, kind, axes: dict, fixed: dict | None = None) -> "GridSpec":
        return cls(ClassifierKind.parse(kind), tuple(axes.items()), tuple((fixed or {}).items()))

    def to_dict(self) -> dict:
        return {"kind": self.kind.label, "axes": {k: list(v) for k, v in self.axes}, "fixed": dict(self.fixed)}

    def points(self) -> list[HyperParams]:
        names = [n for n, _ in self.axes]
        fixed = dict(self.fixed)
        return [
            make_params(self.kind, **fixed, **dict(zip(names, combo)))
            for combo in itertools.product(*(v for _, v in self.axes))
        ]

    def __len__(self):
        return int(np.prod([len(v) for _, v in self.axes]))


def _logspace_unit(n, lo_exp, hi):
    return tuple(float(v) for v in np.round(np.logspace(lo_exp, np.log10(hi), n), 12))


def default_grid(kind) -> GridSpec:
    """Full-range grids: mtry 1..30, K 1..99 step 2, sigma and C on 20-point
    log grids over (0, 1] and (0, 10], six decays, fL x kernel."""
    kind = ClassifierKind.parse(kind)
    if kind is ClassifierKind.RANDOM_FOREST:
        return GridSpec.from_dict(kind, {"mtry": tuple(range(1, 31))})
    if kind is ClassifierKind.SVM_RADIAL:
        return GridSpec.from_dict(kind, {"sigma": _logspace_unit(20, -3, 1.0), "c": _logspace_unit(20, -2, 10.0)})
    if kind is ClassifierKind.K_NEAREST:
        return GridSpec.from_dict(kind, {"k": tuple(range(1, 101, 2))})
    if kind is ClassifierKind.LOGISTIC_REGRESSION:
        return GridSpec.from_dict(kind, {"decay": (0.0, 0.001, 0.01, 0.1, 1.0, 10.0)})
    return GridSpec.from_dict(kind, {"fl": (0.0, 0.5, 1.0), "use_kernel": (True, False)})


def default_grids() -> dict[ClassifierKind, GridSpec]:
    return {kind: default_grid(kind) for kind in ClassifierKind}


@dataclass(frozen=True)
class CvScore:
    params: HyperParams
    fold_scores: tuple[float, ...]
    mean: float


def out_of_fold_confidences(kind, params, data: Dataset, folds: FoldAssignment, seed: int = 0) -> np.ndarray:
    """Confidence for every row from the model fitted without that row's fold."""
    if len(folds) != len(data):
        raise ValueError("fold assignment does not match the dataset size")
    out = np.empty(len(data))
    for f in range(folds.k):
        tr, te = folds.train_indices(f), folds.test_indices(f)
        try:
            model = clf.fit(kind, params, (data.X[tr], data.y[tr]), seed=seed + f)
            out[te] = model.confidence(data.X[te])
        except Exception as exc:
            raise FoldError(f, exc, kind) from exc
    return out


def fold_paucs(confidences, labels, folds: FoldAssignment, window=(0.9, 1.0)) -> tuple[float, ...]:
    scores = []
    for f in range(folds.k):
        te = folds.test_indices(f)
        try:
            scores.append(pauc_score(confidences[te], labels[te], window))
        except MetricsError as exc:
            raise FoldError(f, exc) from exc
    return tuple(scores)


def cv_score(kind, params: HyperParams, data: Dataset, folds: FoldAssignment, window=(0.9, 1.0), seed: int = 0) -> CvScore:
    """Mean over folds of the held-out normalized partial AUC.

    The model for fold ``f`` is fitted with seed ``seed + f``.
    """
    conf = out_of_fold_confidences(kind, params, data, folds, seed)
    scores = fold_paucs(conf, data.y, folds, window)
    return CvScore(params, scores, float(np.mean(scores)))


def grid_search(spec: GridSpec, data: Dataset, folds: FoldAssignment, window=(0.9, 1.0), seed: int = 0, progress=None):
    """Score every grid point; best is the highest mean, first in enumeration on ties.

    Returns ``(best_params, all_scores)``.
    """
    results = []
    best = None
    for params in spec.points():
        score = cv_score(spec.kind, params, data, folds, window, seed)
        results.append(score)
        if best is None or score.mean > best.mean:
            best = score
        if progress is not None:
            progress(score)
    return best.params, results


def grid_report_csv(kind, scores: list[CvScore]) -> str:
    kind = ClassifierKind.parse(kind)
    k = max((len(s.fold_scores) for s in scores), default=0)
    buf = io.StringIO()
    buf.write(",".join(["kind", "param_json", *(f"fold_{i}" for i in range(1, k + 1)), "mean"]) + "\n")
    for s in scores:
        pj = json.dumps(s.params.to_dict(), sort_keys=True).replace('"', '""')
        folds = ",".join(repr(float(v)) for v in s.fold_scores)
        buf.write(f'{kind.label},"{pj}",{folds},{s.mean!r}\n')
    return buf.getvalue()


def write_grid_report(path, kind, scores: list[CvScore]) -> None:
    atomic_write_text(path, grid_report_csv(kind, scores))
