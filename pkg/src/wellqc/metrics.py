"""Confusion matrix, classification metrics, prediction, and QC reports.

The positive class is "defective" (label 1), so precision and recall describe
how well defects are caught. With TP/TN/FP/FN counted over an evaluation:

    accuracy  = (TP + TN) / (TP + FP + TN + FN)
    precision = TP / (TP + FP)
    recall    = TP / (TP + FN)
    f1        = 2*TP / (2*TP + FP + FN)

Zero-denominator precision/recall are reported as None (JSON null) rather
than 0.0 so degenerate evaluations stay visible; f1 is None when either is.
"""

import csv
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from wellqc.errors import EmptyEvaluation, LabelError
from wellqc.nn.model import predict_probs

REPORT_SCHEMA_VERSION = 1
TEXT_HEADER = "Method, Accuracy, Precision, Recall, F1 score"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


class MetricValues(NamedTuple):
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None


def confusion(true_labels, predicted_labels) -> ConfusionMatrix:
    """Count TP/TN/FP/FN over paired binary label sequences."""
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if t.shape != p.shape:
        raise LabelError(f"label sequences differ in length: {t.shape} vs {p.shape}")
    for name, arr in (("true", t), ("predicted", p)):
        if arr.size and not np.isin(arr, (0, 1)).all():
            bad = arr[~np.isin(arr, (0, 1))][0]
            raise LabelError(f"{name} labels must be 0 or 1, found {bad}")
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fp=int(np.sum((t == 0) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def metrics(cm: ConfusionMatrix) -> MetricValues:
    """Accuracy, precision, recall, f1 from a confusion matrix."""
    if cm.total == 0:
        raise EmptyEvaluation("cannot compute metrics over zero examples")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    if precision is None or recall is None:
        f1 = None
    else:
        f1 = 2 * cm.tp / (2 * cm.tp + cm.fp + cm.fn)
    return MetricValues(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


def predict(checkpoint, images, threshold: float = 0.5):
    """Labels and defect probabilities for a stack of images.

    label = 1 iff p(defective) >= threshold; the boundary is inclusive, so a
    tie at exactly ``threshold`` is called defective. At the default 0.5 this
    matches argmax except on exact ties.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if checkpoint.spec.num_classes != 2:
        raise LabelError(f"thresholded prediction is binary; model has {checkpoint.spec.num_classes} classes")
    probs = predict_probs(checkpoint.to_model(), np.asarray(images))
    p1 = probs[:, 1]
    labels = (p1 >= threshold).astype(np.int64)
    return labels, p1


@dataclass(frozen=True)
class PredictionRecord:
    example_id: str
    true_label: int
    predicted_label: int
    prob_defective: float


@dataclass
class MetricsReport:
    method: str
    cm: ConfusionMatrix
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    threshold: float = 0.5
    examples: list[PredictionRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "method": self.method,
            "threshold": self.threshold,
            "confusion_matrix": self.cm.to_dict(),
            "metrics": {
                "accuracy": self.accuracy,
                "precision": self.precision,
                "recall": self.recall,
                "f1": self.f1,
            },
            "examples": [
                {
                    "id": r.example_id,
                    "true_label": r.true_label,
                    "predicted_label": r.predicted_label,
                    "prob_defective": r.prob_defective,
                }
                for r in self.examples
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        cm = ConfusionMatrix(**d["confusion_matrix"])
        m = d["metrics"]
        return cls(
            method=d["method"],
            cm=cm,
            accuracy=m["accuracy"],
            precision=m["precision"],
            recall=m["recall"],
            f1=m["f1"],
            threshold=d.get("threshold", 0.5),
            examples=[
                PredictionRecord(
                    example_id=e["id"],
                    true_label=e["true_label"],
                    predicted_label=e["predicted_label"],
                    prob_defective=e["prob_defective"],
                )
                for e in d.get("examples", [])
            ],
        )


def evaluate_checkpoint(checkpoint, dataset, threshold: float = 0.5, method: str | None = None) -> MetricsReport:
    """Predict over a dataset and assemble the full QC report."""
    if len(dataset) == 0:
        raise EmptyEvaluation("cannot evaluate an empty dataset")
    labels, p1 = predict(checkpoint, dataset.images, threshold)
    cm = confusion(dataset.labels, labels)
    vals = metrics(cm)
    ids = dataset.ids if dataset.ids else [str(i) for i in range(len(dataset))]
    records = [
        PredictionRecord(
            example_id=ids[i],
            true_label=int(dataset.labels[i]),
            predicted_label=int(labels[i]),
            prob_defective=float(p1[i]),
        )
        for i in range(len(dataset))
    ]
    return MetricsReport(
        method=method or "CNN",
        cm=cm,
        accuracy=vals.accuracy,
        precision=vals.precision,
        recall=vals.recall,
        f1=vals.f1,
        threshold=threshold,
        examples=records,
    )


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def report_text(report: MetricsReport) -> str:
    """Plain-text summary, one row per method."""
    row = ", ".join(
        [report.method, _fmt(report.accuracy), _fmt(report.precision), _fmt(report.recall), _fmt(report.f1)]
    )
    return f"{TEXT_HEADER}\n{row}\n"


def emit_report(report: MetricsReport, path, format: str = "json") -> None:
    """Write the report: canonical JSON, per-example CSV, or summary text."""
    if format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "true_label", "predicted_label", "prob_defective"])
            for r in report.examples:
                writer.writerow([r.example_id, r.true_label, r.predicted_label, f"{r.prob_defective:.6f}"])
    elif format == "text":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report_text(report))
    else:
        raise ValueError(f"unknown report format {format!r}; expected json, csv, or text")
