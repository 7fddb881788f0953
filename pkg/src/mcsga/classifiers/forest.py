"""Random forest of unpruned Gini trees with per-split attribute sampling."""

import numpy as np

from .._kernels import forest_votes, grow_tree
from .base import ClassifierKind, RandomForestParams, Scaler, TrainedModel


class RandomForestModel(TrainedModel):
    """Confidence is the fraction of trees voting positive.

    A tree votes positive when its leaf holds at least half positives.
    Trees are stored flattened: ``roots[t]`` indexes the node arrays.
    """

    kind = ClassifierKind.RANDOM_FOREST

    def __init__(self, params, scaler, roots, feature, threshold, left, right, value):
        super().__init__(params, scaler)
        self.roots = np.ascontiguousarray(roots, dtype=np.intp)
        self.feature = np.ascontiguousarray(feature, dtype=np.intp)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.left = np.ascontiguousarray(left, dtype=np.intp)
        self.right = np.ascontiguousarray(right, dtype=np.intp)
        self.value = np.ascontiguousarray(value, dtype=np.float64)

    @property
    def n_trees(self):
        return len(self.roots)

    def votes(self, Z):
        return forest_votes(
            np.ascontiguousarray(Z), self.roots, self.feature, self.threshold, self.left, self.right, self.value
        )

    def _confidence(self, Z):
        return self.votes(Z) / self.n_trees

    def _state(self):
        return {
            "roots": self.roots.tolist(),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def _from_state(cls, params, scaler, state):
        return cls(params, scaler, *(state[k] for k in ("roots", "feature", "threshold", "left", "right", "value")))


def fit_forest(params: RandomForestParams, X, y, seed) -> RandomForestModel:
    scaler = Scaler.fit(X)
    Z = np.ascontiguousarray(scaler.transform(X))
    positive = np.ascontiguousarray(y == 1, dtype=np.int8)
    n, d = Z.shape
    mtry = min(params.mtry, d)
    rng = np.random.default_rng(seed)
    parts = []
    offset = 0
    roots = []
    for _ in range(params.n_trees):
        sample = rng.integers(0, n, n).astype(np.intp)
        tree_seed = int(rng.integers(0, 2**63))
        feat, thr, left, right, val = grow_tree(Z, positive, sample, mtry, params.min_node_size, tree_seed)
        inner = feat >= 0
        left = np.where(inner, left + offset, -1)
        right = np.where(inner, right + offset, -1)
        parts.append((feat, thr, left, right, val))
        roots.append(offset)
        offset += len(feat)
    arrays = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    return RandomForestModel(params, scaler, np.array(roots, dtype=np.intp), *arrays)
