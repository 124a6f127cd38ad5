"""Figures written next to the delimited reports.

Everything renders through the Agg backend with fixed styling and no
timestamp metadata, so identical inputs give byte-identical PNGs.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import METRIC_NAMES  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 100,
}
METRIC_LABELS = {"accuracy": "Accuracy", "precision": "Precision", "recall": "Recall", "f1": "F1-score"}
SHORT_MODEL = {
    "svm": "SVM",
    "decision_tree": "DT",
    "random_forest": "RF",
    "knn": "KNN",
    "logistic_regression": "LR",
    "chain": "Chain",
}


def _figsize(width=7.0, rows=1):
    golden = (math.sqrt(5) - 1.0) / 2.0
    return width, max(2.4, width * golden * 0.6 * rows)


def _save(fig, path):
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def _bars(ax, groups: Sequence[str], values: np.ndarray, series: Sequence[str]):
    """Grouped bars; ``values`` is (groups, series) with NaN for undefined."""
    n_g, n_s = values.shape
    width = 0.8 / max(n_s, 1)
    x = np.arange(n_g)
    for j, name in enumerate(series):
        col = np.nan_to_num(values[:, j], nan=0.0)
        bars = ax.bar(x + (j - (n_s - 1) / 2) * width, col, width, label=name)
        for b, v in zip(bars, values[:, j]):
            if np.isnan(v):
                ax.annotate("n/a", (b.get_x() + b.get_width() / 2, 0.01), ha="center", fontsize=6, rotation=90)
    ax.set_xticks(x)
    ax.set_xticklabels(groups)
    ax.set_ylim(0, 1.05)


def metrics_chart(rows, path, title: str = "") -> None:
    """One panel per label: the four metrics for each model.

    ``rows`` are report rows with ``model``, ``label`` and ``metrics``
    attributes; degenerate rows (``metrics is None``) show as n/a.
    """
    labels = list(dict.fromkeys(r.label for r in rows))
    models = list(dict.fromkeys(r.model for r in rows))
    series = [METRIC_LABELS[m] for m in METRIC_NAMES]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(labels), 1, figsize=_figsize(7.0, len(labels)), squeeze=False)
        for ax, label in zip(axes[:, 0], labels):
            vals = np.full((len(models), len(series)), np.nan)
            for r in rows:
                if r.label != label or r.metrics is None:
                    continue
                i = models.index(r.model)
                vals[i] = [np.nan if v is None else v for v in r.metrics.as_tuple()]
            _bars(ax, [SHORT_MODEL.get(m, m) for m in models], vals, series)
            ax.set_title(label)
        axes[0, 0].legend(loc="upper left", bbox_to_anchor=(1.0, 1.0), frameon=False)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        _save(fig, path)


def method_comparison_chart(
    results: Mapping[str, Sequence], path, models: Sequence[str] = ("decision_tree", "random_forest"),
    label: str = "macro",
) -> None:
    """Side-by-side metrics of selected models under each feature mode."""
    modes = list(results)
    series = [METRIC_LABELS[m] for m in METRIC_NAMES]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(models), figsize=_figsize(7.0), squeeze=False)
        for ax, model in zip(axes[0], models):
            vals = np.full((len(modes), len(series)), np.nan)
            for i, mode in enumerate(modes):
                for r in results[mode]:
                    if r.model == model and r.label == label and r.metrics is not None:
                        vals[i] = [np.nan if v is None else v for v in r.metrics.as_tuple()]
            _bars(ax, modes, vals, series)
            ax.set_title(SHORT_MODEL.get(model, model))
        axes[0, -1].legend(loc="upper left", bbox_to_anchor=(1.0, 1.0), frameon=False)
        fig.tight_layout()
        _save(fig, path)
