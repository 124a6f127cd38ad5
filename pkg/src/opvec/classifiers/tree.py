"""CART decision tree with Gini impurity."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .base import BinaryClassifier, class_weights

_LEAF = -1


def resolve_max_features(spec, d: int) -> int:
    if spec is None:
        return d
    if spec == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    if isinstance(spec, float) and 0 < spec <= 1:
        return max(1, math.ceil(spec * d))
    k = int(spec)
    if k < 1:
        raise ValueError(f"max_features must be positive, got {spec!r}")
    return min(k, d)


def best_split(X: np.ndarray, yw: np.ndarray, w: np.ndarray, features: np.ndarray):
    """Lowest weighted Gini split among ``features`` (sorted ascending).

    ``X`` holds the node's rows; ``yw`` is the positive-class weight per row
    and ``w`` the total weight. Returns ``(feature, threshold)`` or None when
    every candidate column is constant. Ties go to the lowest feature index,
    then the lowest threshold.
    """
    cols = X[:, features]
    order = np.argsort(cols, axis=0, kind="stable")
    vals = np.take_along_axis(cols, order, axis=0)
    pos = np.cumsum(yw[order], axis=0)
    tot = np.cumsum(w[order], axis=0)
    pos_l, tot_l = pos[:-1], tot[:-1]
    pos_r, tot_r = pos[-1] - pos_l, tot[-1] - tot_l
    neg_l, neg_r = tot_l - pos_l, tot_r - pos_r
    with np.errstate(divide="ignore", invalid="ignore"):
        # weighted impurity sum: w_c * gini_c = w_c - (p_c^2 + n_c^2) / w_c
        imp = (tot_l - (pos_l**2 + neg_l**2) / tot_l) + (tot_r - (pos_r**2 + neg_r**2) / tot_r)
    valid = vals[1:] > vals[:-1]
    imp = np.where(valid & (tot_l > 0) & (tot_r > 0), imp, np.inf)
    if imp.size == 0:
        return None
    pos_in_col = np.argmin(imp, axis=0)
    col_best = imp[pos_in_col, np.arange(imp.shape[1])]
    j = int(np.argmin(col_best))
    if not np.isfinite(col_best[j]):
        return None
    i = int(pos_in_col[j])
    lo, hi = float(vals[i, j]), float(vals[i + 1, j])
    thr = (lo + hi) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(features[j]), thr


class DecisionTree(BinaryClassifier):
    kind = "decision_tree"
    defaults = {
        "max_depth": None,
        "min_samples_split": 2,
        "max_features": None,
        "class_weight": None,
    }

    def __init__(self, input_dim, hyperparams=None):
        super().__init__(input_dim, hyperparams)
        self.feature = np.zeros(0, dtype=np.int64)
        self.threshold = np.zeros(0)
        self.left = np.zeros(0, dtype=np.int64)
        self.right = np.zeros(0, dtype=np.int64)
        self.value = np.zeros(0)

    def fit(self, X, y, rng: Optional[np.random.Generator] = None, sample_weight=None):
        n, d = X.shape
        w = class_weights(y, self.hyperparams["class_weight"])
        if sample_weight is not None:
            w = w * sample_weight
        yw = w * y
        m = resolve_max_features(self.hyperparams["max_features"], d)
        max_depth = self.hyperparams["max_depth"]
        min_split = max(2, int(self.hyperparams["min_samples_split"]))
        if m < d and rng is None:
            rng = np.random.default_rng(0)

        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(idx):
            feature.append(_LEAF)
            threshold.append(0.0)
            left.append(_LEAF)
            right.append(_LEAF)
            wt = w[idx].sum()
            value.append(float(yw[idx].sum() / wt) if wt > 0 else 0.0)
            return len(feature) - 1

        root = new_node(np.arange(n))
        stack = [(root, np.arange(n), 0)]
        while stack:
            node, idx, depth = stack.pop()
            if len(idx) < min_split or (max_depth is not None and depth >= max_depth):
                continue
            ys = y[idx]
            if ys.min() == ys.max():
                continue
            split = self._search(X[idx], yw[idx], w[idx], d, m, rng)
            if split is None:
                continue
            f, thr = split
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            feature[node], threshold[node] = f, thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold, dtype=np.float64)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.value = np.array(value, dtype=np.float64)
        return self

    @staticmethod
    def _search(Xn, ywn, wn, d, m, rng):
        if m >= d:
            return best_split(Xn, ywn, wn, np.arange(d))
        # draw m candidates; if all are constant here, keep drawing from the rest
        perm = rng.permutation(d)
        for start in range(0, d, m):
            split = best_split(Xn, ywn, wn, np.sort(perm[start : start + m]))
            if split is not None:
                return split
        return None

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != _LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active[rows] = self.feature[node[rows]] != _LEAF
        return node

    def _score(self, X):
        return self.value[self.apply(X)]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def params(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_params(cls, input_dim, hyperparams, params):
        t = cls(input_dim, hyperparams)
        t.feature = np.array(params["feature"], dtype=np.int64)
        t.threshold = np.array(params["threshold"], dtype=np.float64)
        t.left = np.array(params["left"], dtype=np.int64)
        t.right = np.array(params["right"], dtype=np.int64)
        t.value = np.array(params["value"], dtype=np.float64)
        return t
