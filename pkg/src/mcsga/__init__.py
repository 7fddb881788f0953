"""Weighted multiple-classifier system tuned by a genetic algorithm on partial AUC."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .dataset import Dataset, SynthSpec, generate_synthetic, load_csv, split_train_validation, stratified_kfold, write_csv
from .metrics import auc, bootstrap_pauc_test, confusion, partial_auc, pauc_score, report, roc_curve
from .classifiers import ClassifierKind, fit, make_params
from .ga import GaConfig, run_ga
from .ensemble import EnsembleModel, build_confidence_matrix, fit_ensemble, tune_weights

__all__ = [
    "__version__", "BACKEND",
    "Dataset", "SynthSpec", "generate_synthetic", "load_csv", "split_train_validation", "stratified_kfold", "write_csv",
    "auc", "bootstrap_pauc_test", "confusion", "partial_auc", "pauc_score", "report", "roc_curve",
    "ClassifierKind", "fit", "make_params",
    "GaConfig", "run_ga",
    "EnsembleModel", "build_confidence_matrix", "fit_ensemble", "tune_weights",
]
