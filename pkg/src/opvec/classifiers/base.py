from __future__ import annotations

import warnings
from typing import Any, ClassVar, Optional

import numpy as np


class DimensionError(ValueError):
    pass


class FitError(ValueError):
    pass


class DegenerateTrainingWarning(UserWarning):
    """Training labels held a single class; a constant predictor was produced."""


def as_matrix(X, input_dim: Optional[int] = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if input_dim is not None and X.shape[1] != input_dim:
        raise DimensionError(f"model expects {input_dim} features, got {X.shape[1]}")
    return X


def check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    try:
        X = as_matrix(X)
    except ValueError as exc:
        # ragged rows land here
        raise DimensionError(f"samples do not share one dimension: {exc}") from exc
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != len(X):
        raise FitError(f"{len(X)} samples but labels of shape {y.shape}")
    if len(X) < 1:
        raise FitError("no training samples")
    if not np.isin(y, (0, 1)).all():
        raise FitError("labels must be 0 or 1")
    return X, y.astype(np.int64)


def class_weights(y: np.ndarray, mode) -> np.ndarray:
    """Per-sample weights; ``mode`` is None, ``"balanced"`` or ``{0: w0, 1: w1}``."""
    if mode is None:
        return np.ones(len(y))
    if mode == "balanced":
        n = len(y)
        counts = np.bincount(y, minlength=2).astype(float)
        per_class = np.where(counts > 0, n / (2.0 * np.maximum(counts, 1)), 0.0)
    elif isinstance(mode, dict):
        per_class = np.array([float(mode.get(0, mode.get("0", 1.0))), float(mode.get(1, mode.get("1", 1.0)))])
    else:
        raise ValueError(f"unknown class_weight {mode!r}")
    return per_class[y]


class BinaryClassifier:
    """Common surface of every trained model.

    ``predict`` returns 1 exactly when ``predict_score`` is strictly above 0.5.
    """

    kind: ClassVar[str] = ""
    defaults: ClassVar[dict[str, Any]] = {}

    def __init__(self, input_dim: int, hyperparams: Optional[dict] = None):
        self.input_dim = int(input_dim)
        hp = dict(self.defaults)
        if hyperparams:
            unknown = set(hyperparams) - set(self.defaults)
            if unknown:
                raise ValueError(f"unknown {self.kind} hyperparameters: {sorted(unknown)}")
            hp.update(hyperparams)
        self.hyperparams = hp

    degenerate = False

    def predict_score(self, X) -> np.ndarray:
        return self._score(as_matrix(X, self.input_dim))

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) > 0.5).astype(np.int64)

    def _score(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "degenerate": self.degenerate,
            "input_dim": self.input_dim,
            "hyperparams": self.hyperparams,
            "params": self.params(),
        }


class ConstantModel(BinaryClassifier):
    """Stand-in for a model whose training labels were all one class."""

    degenerate = True

    def __init__(self, kind: str, input_dim: int, label: int, hyperparams=None):
        self.kind = kind
        self.input_dim = int(input_dim)
        self.hyperparams = dict(hyperparams or {})
        self.label = int(label)

    def _score(self, X):
        return np.full(len(X), float(self.label))

    def params(self):
        return {"label": self.label}


def constant_for(kind, X, y, hyperparams) -> ConstantModel:
    label = int(y[0])
    warnings.warn(
        f"{kind}: training labels are all {label}; using a constant predictor",
        DegenerateTrainingWarning,
        stacklevel=3,
    )
    return ConstantModel(kind, X.shape[1], label, hyperparams)
