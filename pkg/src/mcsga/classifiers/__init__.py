"""Five binary base classifiers behind one fit/confidence/predict surface."""

from __future__ import annotations

import json

import numpy as np

from .._io import atomic_write_text
from ..dataset import Dataset
from .base import (
    PARAM_TYPES,
    ClassifierError,
    ClassifierKind,
    ConvergenceError,
    HyperParams,
    KNearestParams,
    LogisticRegressionParams,
    NaiveBayesParams,
    RandomForestParams,
    Scaler,
    SvmRadialParams,
    TrainedModel,
    check_training_data,
    make_params,
)
from .forest import RandomForestModel, fit_forest
from .knn import KNearestModel, fit_knn
from .logistic import LogisticRegressionModel, fit_logistic
from .naive_bayes import NaiveBayesModel, fit_naive_bayes
from .svm import SvmRadialModel, fit_svm

_FITTERS = {
    ClassifierKind.RANDOM_FOREST: fit_forest,
    ClassifierKind.SVM_RADIAL: fit_svm,
    ClassifierKind.K_NEAREST: fit_knn,
    ClassifierKind.LOGISTIC_REGRESSION: fit_logistic,
    ClassifierKind.NAIVE_BAYES: fit_naive_bayes,
}
_MODELS = {
    ClassifierKind.RANDOM_FOREST: RandomForestModel,
    ClassifierKind.SVM_RADIAL: SvmRadialModel,
    ClassifierKind.K_NEAREST: KNearestModel,
    ClassifierKind.LOGISTIC_REGRESSION: LogisticRegressionModel,
    ClassifierKind.NAIVE_BAYES: NaiveBayesModel,
}


def fit(kind, params: HyperParams, train, seed: int = 0) -> TrainedModel:
    """Fit one base classifier on a labelled Dataset or an ``(X, y)`` pair.

    Rows are put in a canonical (lexicographic) order first, so the fitted
    model depends on the training set but not on its row order.
    """
    kind = ClassifierKind.parse(kind)
    if params.kind is not kind:
        raise ClassifierError(f"{type(params).__name__} does not parameterize {kind.label}")
    params.validate()
    X, y = (train.X, train.y) if isinstance(train, Dataset) else train
    X, y = check_training_data(X, y)
    order = np.lexsort((y, *X.T[::-1]))
    return _FITTERS[kind](params, np.ascontiguousarray(X[order]), y[order], seed)


def confidence(model: TrainedModel, x):
    return model.confidence(x)


def predict(model: TrainedModel, x, threshold: float = 0.5):
    return model.predict(x, threshold)


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != "mcsga-model/1":
        raise ClassifierError(f"unrecognized model document format {doc.get('format')!r}")
    kind = ClassifierKind.parse(doc["kind"])
    params = make_params(kind, **doc["params"])
    scaler = Scaler.from_dict(doc["scaler"])
    return _MODELS[kind]._from_state(params, scaler, doc["state"])


def dumps_model(model: TrainedModel) -> str:
    return json.dumps(model.to_dict())


def loads_model(text: str) -> TrainedModel:
    return model_from_dict(json.loads(text))


def save_model(model: TrainedModel, path) -> None:
    atomic_write_text(path, dumps_model(model))


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())


__all__ = [
    "ClassifierError",
    "ClassifierKind",
    "ConvergenceError",
    "HyperParams",
    "KNearestParams",
    "LogisticRegressionParams",
    "NaiveBayesParams",
    "PARAM_TYPES",
    "RandomForestParams",
    "SvmRadialParams",
    "TrainedModel",
    "confidence",
    "dumps_model",
    "fit",
    "load_model",
    "loads_model",
    "make_params",
    "model_from_dict",
    "predict",
    "save_model",
]
