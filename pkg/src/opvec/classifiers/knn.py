from __future__ import annotations

import numpy as np

from .base import BinaryClassifier, class_weights


class KNearestNeighbors(BinaryClassifier):
    """Euclidean k-NN. Equal distances resolve to the earlier training sample."""

    kind = "knn"
    defaults = {"k": 5, "class_weight": None}

    def __init__(self, input_dim, hyperparams=None):
        super().__init__(input_dim, hyperparams)
        self.X = np.zeros((0, input_dim))
        self.y = np.zeros(0, dtype=np.int64)
        self.w = np.zeros(0)

    def fit(self, X, y):
        self.X = X.copy()
        self.y = y.copy()
        self.w = class_weights(y, self.hyperparams["class_weight"])
        return self

    def neighbors(self, X) -> np.ndarray:
        k = min(int(self.hyperparams["k"]), len(self.X))
        out = np.empty((len(X), k), dtype=np.int64)
        for i, row in enumerate(X):
            d2 = ((self.X - row) ** 2).sum(axis=1)
            out[i] = np.argsort(d2, kind="stable")[:k]
        return out

    def _score(self, X):
        nb = self.neighbors(X)
        wpos = (self.w[nb] * self.y[nb]).sum(axis=1)
        wall = self.w[nb].sum(axis=1)
        return np.divide(wpos, wall, out=np.zeros(len(X)), where=wall > 0)

    def params(self):
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_params(cls, input_dim, hyperparams, params):
        m = cls(input_dim, hyperparams)
        X = np.array(params["X"], dtype=np.float64).reshape(-1, input_dim)
        y = np.array(params["y"], dtype=np.int64)
        return m.fit(X, y)
