"""Binary classifiers over TF-IDF feature vectors.

All five model families share one surface::

    model = fit("random_forest", X, y, {"n_trees": 50}, seed=3)
    predict(model, x)        # 0 or 1 (array for a matrix)
    predict_score(model, x)  # in [0, 1]; predict == 1 iff score > 0.5

Training data with a single class yields a constant predictor and a
:class:`DegenerateTrainingWarning`.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .base import (
    BinaryClassifier,
    ConstantModel,
    DegenerateTrainingWarning,
    DimensionError,
    FitError,
    as_matrix,
    check_training_data,
    constant_for,
)
from .forest import RandomForest
from .knn import KNearestNeighbors
from .linear import LinearSVM, LogisticRegression
from .tree import DecisionTree

MODELS = {
    cls.kind: cls
    for cls in (LinearSVM, DecisionTree, RandomForest, KNearestNeighbors, LogisticRegression)
}
KINDS = tuple(MODELS)

__all__ = [
    "KINDS",
    "BinaryClassifier",
    "ConstantModel",
    "DecisionTree",
    "DegenerateTrainingWarning",
    "DimensionError",
    "FitError",
    "KNearestNeighbors",
    "LinearSVM",
    "LogisticRegression",
    "RandomForest",
    "as_matrix",
    "fit",
    "load_model",
    "model_from_dict",
    "predict",
    "predict_score",
    "save_model",
]


def fit(kind: str, X, y, hyperparams: Optional[dict] = None, seed: int = 0) -> BinaryClassifier:
    if kind not in MODELS:
        raise ValueError(f"unknown model kind {kind!r}; choose from {', '.join(KINDS)}")
    cls = MODELS[kind]
    X, y = check_training_data(X, y)
    model = cls(X.shape[1], hyperparams)
    if y.min() == y.max():
        return constant_for(kind, X, y, model.hyperparams)
    if kind in ("random_forest", "svm"):
        return model.fit(X, y, seed=seed)
    if kind == "decision_tree":
        return model.fit(X, y, rng=np.random.default_rng(seed))
    return model.fit(X, y)


def _apply(fn, x):
    single = np.ndim(x) == 1
    out = fn(x)
    return out[0].item() if single else out


def predict(model: BinaryClassifier, features):
    return _apply(model.predict, getattr(features, "values", features))


def predict_score(model: BinaryClassifier, features):
    return _apply(model.predict_score, getattr(features, "values", features))


def model_from_dict(doc: dict) -> BinaryClassifier:
    kind = doc["kind"]
    if doc.get("degenerate"):
        return ConstantModel(kind, doc["input_dim"], doc["params"]["label"], doc["hyperparams"])
    return MODELS[kind].from_params(doc["input_dim"], doc["hyperparams"], doc["params"])


def save_model(model: BinaryClassifier, path, extra: Optional[dict] = None) -> None:
    doc = {"format": "opvec-model/1", **(extra or {}), **model.to_dict()}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_model(path) -> BinaryClassifier:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
