"""Segmentation scoring against ground truth.

Per-class confusion counts use one-vs-rest binarization.  The five
derived percentages (accuracy, precision, recall, Dice, IoU) follow the
standard count formulas; a zero denominator yields a 0 sentinel plus a
flag naming the degenerate metric, so empty-prediction images still
aggregate instead of aborting a batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .masks import LabelMask, ProbabilityMap

AGGREGATION_MODES = ("macro", "micro-counts")
METRIC_FIELDS = ("acc", "precision", "recall", "dice", "iou")


@dataclass(frozen=True)
class ConfusionCounts:
    class_id: int
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class SegMetrics:
    acc: float
    precision: float
    recall: float
    dice: float
    iou: float
    degenerate: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_FIELDS}


def confusion_counts(pred: LabelMask, gt: LabelMask, class_id: int) -> ConfusionCounts:
    """TP/TN/FP/FN pixel counts for one class, one-vs-rest."""
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise ValueError(
            f"dimension mismatch: pred {pred.width}x{pred.height} vs gt {gt.width}x{gt.height}"
        )
    p = pred.labels == class_id
    g = gt.labels == class_id
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return ConfusionCounts(class_id=class_id, tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(num: int, den: int, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return 100.0 * num / den


def metrics_from_counts(c: ConfusionCounts) -> SegMetrics:
    """Evaluate the five percentage metrics from one set of counts."""
    if c.total <= 0:
        raise ValueError("all-zero confusion counts")
    flags: list[str] = []
    return SegMetrics(
        acc=100.0 * (c.tp + c.tn) / c.total,
        precision=_ratio(c.tp, c.tp + c.fp, "precision", flags),
        recall=_ratio(c.tp, c.tp + c.fn, "recall", flags),
        dice=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "dice", flags),
        iou=_ratio(c.tp, c.tp + c.fp + c.fn, "iou", flags),
        degenerate=tuple(flags),
    )


def sparse_ce_loss(p: ProbabilityMap, gt: LabelMask) -> float:
    """Mean negative log-probability of each pixel's true class.

    Probabilities are clamped below at 1e-12 before the log, so the loss
    is always finite and non-negative.
    """
    if (p.width, p.height) != (gt.width, gt.height):
        raise ValueError(
            f"dimension mismatch: probs {p.width}x{p.height} vs gt {gt.width}x{gt.height}"
        )
    labels = gt.labels.reshape(-1).astype(np.intp)
    if labels.max(initial=0) >= p.classes:
        raise ValueError(
            f"ground-truth label {int(labels.max())} out of range for {p.classes} classes"
        )
    flat = p.probs.reshape(-1, p.classes).astype(np.float64)
    true_probs = flat[np.arange(labels.size), labels]
    return float(-np.mean(np.log(np.maximum(true_probs, 1e-12))))


def aggregate_metrics(
    per_image: Sequence[SegMetrics],
    mode: str = "macro",
    counts: Sequence[ConfusionCounts] | None = None,
) -> SegMetrics:
    """Combine per-image scores for one class.

    ``macro`` takes the unweighted mean of the per-image percentages
    (each image counts equally); ``micro-counts`` re-evaluates the
    formulas over the summed counts and requires ``counts``.
    """
    if mode == "macro":
        if not per_image:
            raise ValueError("no per-image metrics to aggregate")
        flags = sorted({name for m in per_image for name in m.degenerate})
        values = {
            name: math.fsum(getattr(m, name) for m in per_image) / len(per_image)
            for name in METRIC_FIELDS
        }
        return SegMetrics(**values, degenerate=tuple(flags))
    if mode == "micro-counts":
        if not counts:
            raise ValueError("micro-counts aggregation requires per-image counts")
        ids = {c.class_id for c in counts}
        if len(ids) != 1:
            raise ValueError(f"micro-counts aggregation mixes classes {sorted(ids)}")
        pooled = ConfusionCounts(
            class_id=counts[0].class_id,
            tp=sum(c.tp for c in counts),
            tn=sum(c.tn for c in counts),
            fp=sum(c.fp for c in counts),
            fn=sum(c.fn for c in counts),
        )
        return metrics_from_counts(pooled)
    raise ValueError(f"unknown aggregation mode {mode!r}")
