"""Metric report rows and their text / CSV renderings."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .metrics import ConfusionMatrix, MetricSet, fmt_metric

MODEL_NAMES = {
    "svm": "Support Vector Machine",
    "decision_tree": "Decision Tree",
    "random_forest": "Random Forest",
    "knn": "K-Nearest Neighbors",
    "logistic_regression": "Logistic Regression",
    "chain": "Classifier Chain",
}
CSV_FIELDS = ("model", "label", "status", "accuracy", "precision", "recall", "f1", "tp", "tn", "fp", "fn", "excluded")


@dataclass(frozen=True)
class ReportRow:
    model: str
    label: str  # a label name, or "macro"
    status: str  # "ok" or "degenerate"
    metrics: Optional[MetricSet] = None
    cm: Optional[ConfusionMatrix] = None
    # macro rows: labels left out of the mean (degenerate or undefined)
    excluded: int = 0


def _cells(r: ReportRow, digits: Optional[int]) -> list[str]:
    if r.metrics is None:
        vals = ["-"] * 4
    elif digits is None:
        vals = ["undef" if v is None else format(v, ".17g") for v in r.metrics.as_tuple()]
    else:
        vals = [fmt_metric(v, digits) for v in r.metrics.as_tuple()]
    cm = [str(getattr(r.cm, k)) for k in ("tp", "tn", "fp", "fn")] if r.cm else [""] * 4
    return [r.model, r.label, r.status, *vals, *cm, str(r.excluded)]


def write_csv(rows: Iterable[ReportRow], path) -> None:
    """Full-precision machine-readable rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in rows:
            w.writerow(_cells(r, None))


def read_csv(path) -> list[ReportRow]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            if rec["accuracy"] == "-":
                metrics = None
            else:
                metrics = MetricSet(*(None if rec[k] == "undef" else float(rec[k]) for k in ("accuracy", "precision", "recall", "f1")))
            cm = None
            if rec["tp"]:
                cm = ConfusionMatrix(int(rec["tp"]), int(rec["tn"]), int(rec["fp"]), int(rec["fn"]))
            out.append(ReportRow(rec["model"], rec["label"], rec["status"], metrics, cm, int(rec["excluded"] or 0)))
    return out


def render_table(rows: Sequence[ReportRow], title: str = "") -> str:
    """Aligned plain-text table, one block per label, values to 3 decimals."""
    head = ["Machine Learning Model", "Accuracy", "Precision", "Recall", "F1-score", "TP", "TN", "FP", "FN", "Note"]
    lines = []
    if title:
        lines += [title, "=" * len(title), ""]
    for label in dict.fromkeys(r.label for r in rows):
        body = []
        for r in rows:
            if r.label != label:
                continue
            c = _cells(r, 3)
            note = "degenerate: single-class training labels" if r.status == "degenerate" else ""
            if r.excluded and label == "macro":
                note = f"{r.excluded} label(s) left out of a mean"
            body.append([MODEL_NAMES.get(r.model, r.model), *c[3:7], *c[7:11], note])
        widths = [max(len(x[i]) for x in [head, *body]) for i in range(len(head))]
        lines.append(f"[{label}]")
        fmt_row = lambda cells: "  ".join(  # noqa: E731
            cell.ljust(widths[i]) if i in (0, len(head) - 1) else cell.rjust(widths[i]) for i, cell in enumerate(cells)
        ).rstrip()
        lines.append(fmt_row(head))
        lines.append("  ".join("-" * w for w in widths))
        lines += [fmt_row(b) for b in body]
        lines.append("")
    return "\n".join(lines)
