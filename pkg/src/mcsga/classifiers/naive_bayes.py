"""Naive Bayes for continuous attributes: Gaussian or kernel-density class conditionals."""

import math

import numpy as np

from .base import ClassifierKind, NaiveBayesParams, Scaler, TrainedModel

VAR_FLOOR = 1e-9
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def silverman_bandwidth(x):
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), with the usual zero-spread fallbacks."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    sd = x.std(ddof=1) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    lo = min(sd, (q75 - q25) / 1.34)
    if lo <= 0:
        lo = sd or abs(x[0]) or 1.0
    return max(0.9 * lo * n ** (-0.2), math.sqrt(VAR_FLOOR))


def _logsumexp_rows(a):
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True)))[:, 0]


class NaiveBayesModel(TrainedModel):
    """``classes`` holds per-class state keyed "pos"/"neg": log prior plus
    either (mean, var) per attribute or (points, bandwidth) per attribute."""

    kind = ClassifierKind.NAIVE_BAYES

    def __init__(self, params, scaler, classes):
        super().__init__(params, scaler)
        self.classes = {
            name: {k: (np.asarray(v, dtype=np.float64) if isinstance(v, (list, np.ndarray)) else float(v))
                   for k, v in st.items()}
            for name, st in classes.items()
        }

    def _class_loglik(self, Z, st):
        if self.params.use_kernel:
            pts, bw = st["points"], st["bandwidth"]
            total = np.zeros(len(Z))
            for j in range(Z.shape[1]):
                u = (Z[:, j : j + 1] - pts[None, :, j]) / bw[j]
                total += _logsumexp_rows(-0.5 * u * u) - math.log(pts.shape[0]) - math.log(bw[j]) - _LOG_SQRT_2PI
            return total
        mean, var = st["mean"], st["var"]
        return np.sum(-0.5 * (Z - mean) ** 2 / var - 0.5 * np.log(var) - _LOG_SQRT_2PI, axis=1)

    def log_odds(self, Z):
        pos, neg = self.classes["pos"], self.classes["neg"]
        return (pos["log_prior"] + self._class_loglik(Z, pos)) - (neg["log_prior"] + self._class_loglik(Z, neg))

    def _confidence(self, Z):
        z = self.log_odds(Z)
        e = np.exp(-np.abs(z))
        return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def _state(self):
        return {
            name: {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in st.items()}
            for name, st in self.classes.items()
        }

    @classmethod
    def _from_state(cls, params, scaler, state):
        d = len(scaler.mean)
        classes = {}
        for name, st in state.items():
            st = dict(st)
            if "points" in st:
                st["points"] = np.array(st["points"], dtype=np.float64).reshape(-1, d)
            classes[name] = st
        return cls(params, scaler, classes)


def fit_naive_bayes(params: NaiveBayesParams, X, y, seed=None) -> NaiveBayesModel:
    scaler = Scaler.fit(X)
    Z = scaler.transform(X)
    n = len(y)
    classes = {}
    for name, label in (("pos", 1), ("neg", -1)):
        Zc = Z[y == label]
        # fL smooths the class prior
        st = {"log_prior": math.log((len(Zc) + params.fl) / (n + 2.0 * params.fl))}
        if params.use_kernel:
            st["points"] = Zc.copy()
            st["bandwidth"] = np.array([silverman_bandwidth(Zc[:, j]) for j in range(Z.shape[1])])
        else:
            st["mean"] = Zc.mean(axis=0)
            var = Zc.var(axis=0, ddof=1) if len(Zc) > 1 else np.zeros(Z.shape[1])
            st["var"] = np.maximum(var, VAR_FLOOR)
        classes[name] = st
    return NaiveBayesModel(params, scaler, classes)
