"""K-nearest neighbours on standardized attributes."""

import numpy as np

from .base import ClassifierKind, KNearestParams, Scaler, TrainedModel

CHUNK = 512


def squared_distances(A, B):
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(sq, 0.0, out=sq)


def neighbour_fraction(dist, positive, k):
    """Positive fraction among the ``k`` nearest, widened to every point tied
    with the k-th distance."""
    k = min(k, dist.shape[1])
    kth = np.partition(dist, k - 1, axis=1)[:, k - 1 : k]
    included = dist <= kth
    return (included & positive[None, :]).sum(axis=1) / included.sum(axis=1)


class KNearestModel(TrainedModel):
    kind = ClassifierKind.K_NEAREST

    def __init__(self, params, scaler, train_Z, train_y):
        super().__init__(params, scaler)
        self.train_Z = np.ascontiguousarray(train_Z, dtype=np.float64)
        self.train_y = np.asarray(train_y, dtype=np.int8)

    def _confidence(self, Z):
        positive = self.train_y == 1
        out = np.empty(len(Z))
        for start in range(0, len(Z), CHUNK):
            dist = squared_distances(Z[start : start + CHUNK], self.train_Z)
            out[start : start + CHUNK] = neighbour_fraction(dist, positive, self.params.k)
        return out

    def _state(self):
        return {"train_Z": self.train_Z.tolist(), "train_y": self.train_y.tolist()}

    @classmethod
    def _from_state(cls, params, scaler, state):
        d = len(scaler.mean)
        return cls(params, scaler, np.array(state["train_Z"], dtype=np.float64).reshape(-1, d), state["train_y"])


def fit_knn(params: KNearestParams, X, y, seed=None) -> KNearestModel:
    scaler = Scaler.fit(X)
    return KNearestModel(params, scaler, scaler.transform(X), y)
