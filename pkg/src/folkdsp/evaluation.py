"""Stratified splits, confusion matrices, and the five performance metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, SplitError
from .features import GENRES, Dataset


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted, in class_order."""

    counts: np.ndarray
    class_order: tuple

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        k = len(self.class_order)
        if c.shape != (k, k):
            raise DataError("confusion matrix must be square in class_order")
        if np.any(c < 0):
            raise DataError("confusion counts must be non-negative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    error: float
    precision: dict
    recall: dict
    f1: dict
    macro_precision: float
    macro_recall: float
    macro_f1: float


def stratified_split(ds: Dataset, fractions=(0.6, 0.2, 0.2), seed: int = 0):
    """Per-class proportional split into (train, validation, test).

    Base allocation is floor(fraction * class size); leftover rows are
    assigned by a seeded draw with the fractions as weights.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError("fractions must be three positive numbers summing to 1")
    labels = np.array(ds.labels, dtype=object)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    parts = ([], [], [])
    for cls in sorted(set(labels.tolist())):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < 3:
            raise SplitError(f"class {cls!r} has only {len(idx)} samples; need at least 3")
        idx = idx[rng.permutation(len(idx))]
        base = [int(np.floor(f * len(idx))) for f in fractions]
        cursor = 0
        for part, count in zip(parts, base):
            part.extend(idx[cursor : cursor + count].tolist())
            cursor += count
        for i in idx[cursor:]:
            parts[rng.choice(3, p=fractions)].append(int(i))
    return tuple(ds.subset(sorted(p)) for p in parts)


def confusion(y_true, y_pred, class_order=GENRES) -> ConfusionMatrix:
    """Count matrix: counts[i][j] = #{true class i predicted as class j}."""
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise DataError("y_true and y_pred must have equal length")
    index = {c: i for i, c in enumerate(class_order)}
    counts = np.zeros((len(class_order), len(class_order)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t not in index:
            raise DataError(f"unknown true label {t!r}; valid labels: {', '.join(map(str, class_order))}")
        if p not in index:
            raise DataError(f"unknown predicted label {p!r}; valid labels: {', '.join(map(str, class_order))}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts=counts, class_order=tuple(class_order))


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, error, and per-class precision/recall/f1 with the 0/0 -> 0 rule."""
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total <= 0:
        raise DataError("confusion matrix is empty")
    diag = np.diag(counts)
    col = counts.sum(axis=0)
    row = counts.sum(axis=1)
    precision = np.where(col > 0, diag / np.where(col > 0, col, 1.0), 0.0)
    recall = np.where(row > 0, diag / np.where(row > 0, row, 1.0), 0.0)
    pr = precision + recall
    f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
    accuracy = float(diag.sum() / total)
    return MetricsReport(
        accuracy=accuracy,
        error=1.0 - accuracy,
        precision={c: float(p) for c, p in zip(cm.class_order, precision)},
        recall={c: float(r) for c, r in zip(cm.class_order, recall)},
        f1={c: float(v) for c, v in zip(cm.class_order, f1)},
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
    )


def report_to_dict(report: MetricsReport, cm: ConfusionMatrix) -> dict:
    return {
        "accuracy": report.accuracy,
        "error": report.error,
        "per_class": {
            str(c): {
                "precision": report.precision[c],
                "recall": report.recall[c],
                "f1_score": report.f1[c],
            }
            for c in cm.class_order
        },
        "macro": {
            "precision": report.macro_precision,
            "recall": report.macro_recall,
            "f1_score": report.macro_f1,
        },
        "confusion_matrix": {
            "class_order": list(map(str, cm.class_order)),
            "counts": cm.counts.tolist(),
        },
    }


def report_to_text(report: MetricsReport, cm: ConfusionMatrix) -> str:
    """Aligned table: accuracy and error, per-class precision/recall/f1-score,
    macro averages, then the confusion matrix."""
    width = max(len(str(c)) for c in cm.class_order + ("macro avg",))
    lines = [
        f"accuracy  {report.accuracy:.4f}",
        f"error     {report.error:.4f}",
        "",
        f"{'class':<{width}}  precision  recall  f1-score",
    ]
    for c in cm.class_order:
        lines.append(
            f"{str(c):<{width}}  {report.precision[c]:>9.4f}  {report.recall[c]:>6.4f}  {report.f1[c]:>8.4f}"
        )
    lines.append(
        f"{'macro avg':<{width}}  {report.macro_precision:>9.4f}  {report.macro_recall:>6.4f}  {report.macro_f1:>8.4f}"
    )
    lines.append("")
    lines.append("confusion matrix (rows = true, columns = predicted)")
    cell = max(width, 5)
    header = " " * (width + 2) + "  ".join(f"{str(c):>{cell}}" for c in cm.class_order)
    lines.append(header)
    for i, c in enumerate(cm.class_order):
        row = "  ".join(f"{int(v):>{cell}}" for v in cm.counts[i])
        lines.append(f"{str(c):<{width}}  {row}")
    return "\n".join(lines) + "\n"
