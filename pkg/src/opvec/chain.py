"""Classifier chains for multi-label vulnerability detection.

Link ``i`` sees the original features followed by the labels of the ``i``
links before it. During training those extra columns hold the true labels;
at prediction time they hold the earlier links' hard 0/1 predictions (or
their scores with ``feed="score"``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import classifiers
from .classifiers import BinaryClassifier, DimensionError, FitError, as_matrix, model_from_dict

DEFAULT_LABELS = ("reentrancy", "access_control")


def derived_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence([seed, 0xC4A1]).spawn(n)]


def choose_order(Y, label_names: Sequence[str]) -> list[str]:
    """Labels by descending positive count; equal counts in name order."""
    Y = np.asarray(Y)
    if Y.ndim != 2 or len(Y) == 0:
        raise ValueError("need a nonempty (samples, labels) matrix")
    if Y.shape[1] != len(label_names):
        raise ValueError(f"{Y.shape[1]} label columns but {len(label_names)} names")
    freq = Y.sum(axis=0)
    return sorted(label_names, key=lambda name: (-int(freq[label_names.index(name)]), name))


@dataclass
class ChainModel:
    label_names: tuple[str, ...]  # canonical output order
    label_order: tuple[str, ...]  # chain order
    links: list[BinaryClassifier]
    base_kind: str
    input_dim: int
    feed: str = "hard"

    @property
    def link_dims(self) -> list[int]:
        return [m.input_dim for m in self.links]

    def predict(self, X) -> np.ndarray:
        """0/1 labels, shape ``(n, L)``, columns in ``label_names`` order."""
        return self._run(X)[0]

    def predict_scores(self, X) -> np.ndarray:
        return self._run(X)[1]

    def _run(self, X):
        X = as_matrix(X, self.input_dim)
        n, L = len(X), len(self.links)
        extra = np.zeros((n, L))
        hard = np.zeros((n, L), dtype=np.int64)
        score = np.zeros((n, L))
        for i, link in enumerate(self.links):
            Z = np.hstack([X, extra[:, :i]])
            hard[:, i] = link.predict(Z)
            score[:, i] = link.predict_score(Z)
            extra[:, i] = score[:, i] if self.feed == "score" else hard[:, i]
        pos = [self.label_order.index(name) for name in self.label_names]
        return hard[:, pos], score[:, pos]

    def to_dict(self) -> dict:
        return {
            "format": "opvec-chain/1",
            "label_names": list(self.label_names),
            "label_order": list(self.label_order),
            "base_kind": self.base_kind,
            "input_dim": self.input_dim,
            "feed": self.feed,
            "links": [m.to_dict() for m in self.links],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ChainModel":
        return cls(
            tuple(doc["label_names"]),
            tuple(doc["label_order"]),
            [model_from_dict(d) for d in doc["links"]],
            doc["base_kind"],
            int(doc["input_dim"]),
            doc.get("feed", "hard"),
        )


def fit_chain(
    X,
    Y,
    label_names: Sequence[str] = DEFAULT_LABELS,
    base_kind: str = "random_forest",
    hyperparams: Optional[dict] = None,
    seed: int = 0,
    order: Optional[Sequence[str]] = None,
    feed: str = "hard",
) -> ChainModel:
    if feed not in ("hard", "score"):
        raise ValueError(f"feed must be 'hard' or 'score', not {feed!r}")
    X = as_matrix(X)
    Y = np.asarray(Y, dtype=np.int64)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    names = list(label_names)
    if len(X) < 2:
        raise FitError("a chain needs at least 2 samples")
    if Y.shape != (len(X), len(names)):
        raise FitError(f"labels of shape {Y.shape} for {len(X)} samples and {len(names)} names")
    if order is None:
        order = choose_order(Y, names)
    elif sorted(order) != sorted(names):
        raise ValueError("order must be a permutation of label_names")
    cols = [names.index(name) for name in order]
    seeds = derived_seeds(seed, len(order))
    links = []
    for i, col in enumerate(cols):
        # teacher forcing: earlier positions contribute their true labels
        Z = np.hstack([X, Y[:, cols[:i]].astype(np.float64)])
        links.append(classifiers.fit(base_kind, Z, Y[:, col], hyperparams, seed=seeds[i]))
    return ChainModel(tuple(names), tuple(order), links, base_kind, X.shape[1], feed)


def predict_chain(model: ChainModel, features) -> np.ndarray:
    x = getattr(features, "values", features)
    out = model.predict(x)
    return out[0] if np.ndim(x) == 1 else out


def fit_binary_relevance(
    X, Y, label_names: Sequence[str] = DEFAULT_LABELS, base_kind="random_forest", hyperparams=None, seed=0
) -> dict[str, BinaryClassifier]:
    """One independent classifier per label (the chain's baseline)."""
    X = as_matrix(X)
    Y = np.asarray(Y, dtype=np.int64)
    seeds = derived_seeds(seed, len(label_names))
    order = choose_order(Y, list(label_names))
    return {
        name: classifiers.fit(base_kind, X, Y[:, list(label_names).index(name)], hyperparams, seed=seeds[order.index(name)])
        for name in label_names
    }


def save_chain(model: ChainModel, path, extra: Optional[dict] = None) -> None:
    doc = {**model.to_dict(), **(extra or {})}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_chain(path) -> ChainModel:
    return ChainModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


__all__ = [
    "ChainModel",
    "DimensionError",
    "choose_order",
    "fit_binary_relevance",
    "fit_chain",
    "load_chain",
    "predict_chain",
    "save_chain",
]
