"""Shared pieces of the five base classifiers: kinds, hyperparameter records,
the standardizing scaler and the trained-model interface."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import IntEnum
from typing import ClassVar

import numpy as np


class ClassifierError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """An inner solver hit its iteration cap."""

    def __init__(self, solver: str, max_iter: int):
        super().__init__(f"{solver} did not converge within {max_iter} iterations")
        self.solver = solver
        self.max_iter = max_iter


class ClassifierKind(IntEnum):
    RANDOM_FOREST = 1
    SVM_RADIAL = 2
    K_NEAREST = 3
    LOGISTIC_REGRESSION = 4
    NAIVE_BAYES = 5

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def title(self) -> str:
        return _TITLES[self]

    @classmethod
    def parse(cls, text) -> "ClassifierKind":
        if isinstance(text, ClassifierKind):
            return text
        key = str(text).strip()
        for kind in cls:
            if key in (kind.name, kind.label, str(int(kind)), kind.name.lower()):
                return kind
        raise ClassifierError(f"unknown classifier kind {text!r}")


_LABELS = {
    ClassifierKind.RANDOM_FOREST: "RandomForest",
    ClassifierKind.SVM_RADIAL: "SvmRadial",
    ClassifierKind.K_NEAREST: "KNearest",
    ClassifierKind.LOGISTIC_REGRESSION: "LogisticRegression",
    ClassifierKind.NAIVE_BAYES: "NaiveBayes",
}
_TITLES = {
    ClassifierKind.RANDOM_FOREST: "Random Forest",
    ClassifierKind.SVM_RADIAL: "Support Vector Machine",
    ClassifierKind.K_NEAREST: "K-Nearest neighbours",
    ClassifierKind.LOGISTIC_REGRESSION: "Logistic Regression",
    ClassifierKind.NAIVE_BAYES: "Naive Bayes",
}


@dataclass(frozen=True)
class HyperParams:
    kind: ClassVar[ClassifierKind]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        pass

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json_key(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class RandomForestParams(HyperParams):
    kind: ClassVar[ClassifierKind] = ClassifierKind.RANDOM_FOREST
    mtry: int = 6
    n_trees: int = 500
    min_node_size: int = 5

    def validate(self):
        if self.mtry < 1 or self.n_trees < 1 or self.min_node_size < 1:
            raise ClassifierError(f"invalid random forest parameters {self}")


@dataclass(frozen=True)
class SvmRadialParams(HyperParams):
    kind: ClassVar[ClassifierKind] = ClassifierKind.SVM_RADIAL
    sigma: float = 0.05
    c: float = 1.0

    def validate(self):
        if not (self.sigma > 0 and self.c > 0):
            raise ClassifierError(f"sigma and C must be positive, got {self}")


@dataclass(frozen=True)
class KNearestParams(HyperParams):
    kind: ClassVar[ClassifierKind] = ClassifierKind.K_NEAREST
    k: int = 17

    def validate(self):
        if self.k < 1:
            raise ClassifierError(f"K must be at least 1, got {self.k}")


@dataclass(frozen=True)
class LogisticRegressionParams(HyperParams):
    kind: ClassVar[ClassifierKind] = ClassifierKind.LOGISTIC_REGRESSION
    decay: float = 0.0

    def validate(self):
        if not self.decay >= 0:
            raise ClassifierError(f"decay must be nonnegative, got {self.decay}")


@dataclass(frozen=True)
class NaiveBayesParams(HyperParams):
    kind: ClassVar[ClassifierKind] = ClassifierKind.NAIVE_BAYES
    fl: float = 0.0
    use_kernel: bool = True

    def validate(self):
        if not self.fl >= 0:
            raise ClassifierError(f"fL must be nonnegative, got {self.fl}")


PARAM_TYPES: dict[ClassifierKind, type[HyperParams]] = {
    ClassifierKind.RANDOM_FOREST: RandomForestParams,
    ClassifierKind.SVM_RADIAL: SvmRadialParams,
    ClassifierKind.K_NEAREST: KNearestParams,
    ClassifierKind.LOGISTIC_REGRESSION: LogisticRegressionParams,
    ClassifierKind.NAIVE_BAYES: NaiveBayesParams,
}


def make_params(kind, **values) -> HyperParams:
    kind = ClassifierKind.parse(kind)
    return PARAM_TYPES[kind](**values)


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-attribute standardization; constant attributes get unit scale."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Scaler":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=np.float64), np.array(d["scale"], dtype=np.float64))


class TrainedModel:
    """A fitted classifier. Subclasses implement ``_confidence`` on
    standardized rows and the ``_state``/``_from_state`` serialization pair."""

    kind: ClassifierKind

    def __init__(self, params: HyperParams, scaler: Scaler):
        self.params = params
        self.scaler = scaler

    @property
    def n_attr(self) -> int:
        return len(self.scaler.mean)

    def confidence(self, x) -> np.ndarray | float:
        """Confidence in the positive class, in [0, 1], for one row or a matrix."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        X = x.reshape(1, -1) if single else x
        if X.shape[1] != self.n_attr:
            raise ClassifierError(f"expected {self.n_attr} attributes, got {X.shape[1]}")
        c = np.clip(self._confidence(self.scaler.transform(X)), 0.0, 1.0)
        return float(c[0]) if single else c

    def predict(self, x, threshold: float = 0.5):
        if not 0.0 <= threshold <= 1.0:
            raise ClassifierError(f"threshold must lie in [0, 1], got {threshold}")
        c = self.confidence(x)
        return np.where(np.asarray(c) >= threshold, 1, -1) if np.ndim(c) else (1 if c >= threshold else -1)

    def _confidence(self, Z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _state(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_state(cls, params, scaler, state):
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format": "mcsga-model/1",
            "kind": self.kind.label,
            "params": self.params.to_dict(),
            "scaler": self.scaler.to_dict(),
            "state": self._state(),
        }


def check_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ClassifierError("training attributes must be a matrix with one row per label")
    if not np.all((y == 1) | (y == -1)):
        raise ClassifierError("training labels must all be -1 or +1")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise ClassifierError("training data must contain both classes")
    return X, y.astype(np.int8)
