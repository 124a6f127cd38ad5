"""Confusion matrices and accuracy / precision / recall / F1.

A metric whose denominator is zero is *undefined* and carried as ``None``;
it is never silently reported as 0. Reports print it as ``undef``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Mapping, Optional, Sequence

UNDEFINED = None
UNDEF_TEXT = "undef"
METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class MetricSet:
    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, m) for m in METRIC_NAMES)


@dataclass(frozen=True)
class MacroMetrics:
    metrics: MetricSet
    # per metric: how many labels were left out of the mean as undefined
    excluded: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MetricsReport:
    per_label: dict  # label -> MetricSet
    macro: MacroMetrics
    confusion: dict = field(default_factory=dict)  # label -> ConfusionMatrix


def confusion(predictions: Sequence[int], truth: Sequence[int]) -> ConfusionMatrix:
    predictions, truth = list(predictions), list(truth)
    if len(predictions) != len(truth):
        raise ValueError(f"{len(predictions)} predictions for {len(truth)} truth labels")
    if not truth:
        raise ValueError("nothing to evaluate")
    tp = tn = fp = fn = 0
    for p, t in zip(predictions, truth):
        p, t = int(p), int(t)
        if p not in (0, 1) or t not in (0, 1):
            raise ValueError("labels must be 0 or 1")
        if t == 1:
            if p == 1:
                tp += 1
            else:
                fn += 1
        elif p == 1:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, tn, fp, fn)


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den else UNDEFINED


def f1_score(precision: Optional[float], recall: Optional[float]) -> Optional[float]:
    """Harmonic mean of precision and recall."""
    if precision is None or recall is None:
        return UNDEFINED
    return _ratio(2 * precision * recall, precision + recall)


def compute_metrics(cm: ConfusionMatrix) -> MetricSet:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    return MetricSet(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
    )


def macro_average(per_label: Mapping[str, MetricSet]) -> MacroMetrics:
    if not per_label:
        raise ValueError("need at least one label")
    means, excluded = {}, {}
    for name in METRIC_NAMES:
        vals = [getattr(m, name) for m in per_label.values()]
        defined = [v for v in vals if v is not None]
        excluded[name] = len(vals) - len(defined)
        means[name] = sum(defined) / len(defined) if defined else UNDEFINED
    return MacroMetrics(MetricSet(**means), excluded)


def evaluate_labels(predictions: Mapping[str, Sequence[int]], truth: Mapping[str, Sequence[int]]) -> MetricsReport:
    cms = {name: confusion(predictions[name], truth[name]) for name in truth}
    per = {name: compute_metrics(cm) for name, cm in cms.items()}
    return MetricsReport(per, macro_average(per), cms)


def fmt_metric(v: Optional[float], digits: int = 3) -> str:
    return UNDEF_TEXT if v is None else f"{v:.{digits}f}"
