from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .base import BinaryClassifier
from .tree import DecisionTree


def tree_seeds(seed: int, n: int) -> list[int]:
    """Independent per-tree seeds derived from one master seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


class RandomForest(BinaryClassifier):
    """Bagged CART trees with per-split feature subsampling.

    Scores are the fraction of trees voting 1, so an even split scores 0.5
    and predicts 0.
    """

    kind = "random_forest"
    defaults = {
        "n_trees": 100,
        "bootstrap": True,
        "max_features": "sqrt",
        "max_depth": None,
        "min_samples_split": 2,
        "class_weight": None,
        "n_jobs": 1,
    }

    def __init__(self, input_dim, hyperparams=None):
        super().__init__(input_dim, hyperparams)
        self.trees: list[DecisionTree] = []

    def _tree_hp(self):
        hp = self.hyperparams
        return {
            "max_depth": hp["max_depth"],
            "min_samples_split": hp["min_samples_split"],
            "max_features": hp["max_features"],
            "class_weight": hp["class_weight"],
        }

    def _fit_one(self, X, y, seed):
        rng = np.random.default_rng(seed)
        if self.hyperparams["bootstrap"]:
            idx = rng.integers(0, len(X), size=len(X))
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        return DecisionTree(self.input_dim, self._tree_hp()).fit(Xb, yb, rng=rng)

    def fit(self, X, y, seed: int = 0):
        seeds = tree_seeds(seed, int(self.hyperparams["n_trees"]))
        n_jobs = int(self.hyperparams["n_jobs"] or 1)
        if n_jobs > 1:
            with ThreadPoolExecutor(n_jobs) as pool:
                self.trees = list(pool.map(lambda s: self._fit_one(X, y, s), seeds))
        else:
            self.trees = [self._fit_one(X, y, s) for s in seeds]
        return self

    def votes(self, X) -> np.ndarray:
        """Hard 0/1 vote of each tree, shape ``(n_trees, n_samples)``."""
        return np.vstack([t.predict(X) for t in self.trees])

    def _score(self, X):
        return self.votes(X).mean(axis=0)

    def params(self):
        return {"trees": [t.params() for t in self.trees]}

    @classmethod
    def from_params(cls, input_dim, hyperparams, params):
        f = cls(input_dim, hyperparams)
        f.trees = [DecisionTree.from_params(input_dim, f._tree_hp(), p) for p in params["trees"]]
        return f
