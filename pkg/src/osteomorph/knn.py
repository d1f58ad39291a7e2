"""KNN pain-status classification over per-image bone shape features.

Feature vectors hold, in fixed order: femur circularity, femur
eccentricity, femur area, femur perimeter, then the same four for the
tibia.  Because area (px^2) dwarfs the dimensionless descriptors,
vectors are z-scored with statistics fitted on the training set only;
constant dimensions are dropped and recorded on the model.

Tie rules are fully deterministic: equal distances rank by lower
training index, and a tied vote goes to the tied class owning the
single nearest neighbor.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingClassError, OsteomorphError
from .masks import BONE_CLASSES, CATEGORIES, CLASS_NAMES, LabelMask, PainCategory
from .shape import compute_shape_features

logger = logging.getLogger(__name__)

FEATURE_NAMES = tuple(
    f"{CLASS_NAMES[cid]}_{metric}"
    for cid in BONE_CLASSES
    for metric in ("circularity", "eccentricity", "area", "perimeter")
)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    image_id: str
    values: np.ndarray  # (8,) float64, FEATURE_NAMES order

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(FEATURE_NAMES),):
            raise ValueError(
                f"feature vector must have {len(FEATURE_NAMES)} entries, got {values.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError(f"feature vector for {self.image_id!r} has non-finite entries")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class KnnModel:
    points: np.ndarray  # (n, d) z-scored training vectors, kept dims only
    labels: tuple[PainCategory, ...]
    k: int
    mean: np.ndarray  # (d,) over kept dims
    std: np.ndarray  # (d,) over kept dims, all > 0
    kept_dims: tuple[int, ...]
    dropped_dims: tuple[int, ...]


@dataclass(frozen=True)
class PerClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    accuracy: float
    f1_macro: float
    per_class: dict[str, PerClassMetrics]
    confusion: np.ndarray  # (3, 3) ints, rows = true, cols = predicted
    categories: tuple[str, ...]
    excluded: tuple[str, ...]  # categories absent from the test set


def build_features(
    masks: Iterable[tuple[str, LabelMask]]
) -> tuple[list[FeatureVector], list[tuple[str, str]]]:
    """One 8-vector per image; images missing a bone are skipped and logged.

    Returns (vectors, skipped) where skipped pairs each dropped image id
    with the reason.
    """
    vectors: list[FeatureVector] = []
    skipped: list[tuple[str, str]] = []
    for image_id, mask in masks:
        values = []
        try:
            for class_id in BONE_CLASSES:
                feat = compute_shape_features(mask, class_id)
                values.extend([feat.circularity, feat.eccentricity, feat.area, feat.perimeter])
        except (MissingClassError, OsteomorphError) as exc:
            logger.warning("skipping %s: %s", image_id, exc)
            skipped.append((image_id, str(exc)))
            continue
        vectors.append(FeatureVector(image_id=image_id, values=np.asarray(values)))
    return vectors, skipped


def fit_knn(
    features: Sequence[FeatureVector],
    labels: Sequence[PainCategory],
    k: int,
) -> KnnModel:
    """Fit the scaler and store the scaled training set."""
    if not features:
        raise ValueError("empty training set")
    if len(features) != len(labels):
        raise ValueError(f"{len(features)} features but {len(labels)} labels")
    if not 1 <= k <= len(features):
        raise ValueError(f"k must be in [1, {len(features)}], got {k}")
    raw = np.vstack([f.values for f in features]).astype(np.float64)
    if not np.isfinite(raw).all():
        raise ValueError("training features contain non-finite values")
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    # A dimension is constant when every raw value is identical; the float
    # std of such a column can come out as ~1e-14 instead of 0, so test
    # the raw values directly.
    constant = np.all(raw == raw[0, :], axis=0) | (std == 0)
    kept = tuple(int(i) for i in np.nonzero(~constant)[0])
    dropped = tuple(int(i) for i in np.nonzero(constant)[0])
    if not kept:
        raise ValueError("all feature dimensions are constant")
    if dropped:
        logger.info(
            "dropping constant feature dimensions: %s",
            ", ".join(FEATURE_NAMES[i] for i in dropped),
        )
    kept_idx = np.asarray(kept, dtype=np.intp)
    return KnnModel(
        points=(raw[:, kept_idx] - mean[kept_idx]) / std[kept_idx],
        labels=tuple(labels),
        k=k,
        mean=mean[kept_idx],
        std=std[kept_idx],
        kept_dims=kept,
        dropped_dims=dropped,
    )


def predict(model: KnnModel, v: FeatureVector | np.ndarray) -> PainCategory:
    """Majority vote among the k nearest training points (Euclidean)."""
    raw = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
    if not np.isfinite(raw).all():
        raise ValueError("query vector contains non-finite values")
    z = (raw[np.asarray(model.kept_dims, dtype=np.intp)] - model.mean) / model.std
    dists = np.sqrt(np.sum((model.points - z) ** 2, axis=1))
    # Stable sort realizes the distance tie rule: lower index wins.
    nearest = np.argsort(dists, kind="stable")[: model.k]
    votes = Counter(model.labels[i] for i in nearest)
    top = max(votes.values())
    tied = {cat for cat, n in votes.items() if n == top}
    if len(tied) == 1:
        return tied.pop()
    for i in nearest:  # vote tie: tied class with the nearest single neighbor
        if model.labels[i] in tied:
            return model.labels[i]
    raise AssertionError("unreachable: nearest neighbors exhausted")


def _per_class(confusion: np.ndarray, idx: int) -> PerClassMetrics:
    tp = int(confusion[idx, idx])
    support = int(confusion[idx].sum())
    predicted = int(confusion[:, idx].sum())
    precision = 100.0 * tp / predicted if predicted else 0.0
    recall = 100.0 * tp / support if support else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PerClassMetrics(precision=precision, recall=recall, f1=f1, support=support)


def evaluate(
    model: KnnModel,
    test_features: Sequence[FeatureVector],
    test_labels: Sequence[PainCategory],
) -> ClassificationReport:
    """Accuracy, macro F1, per-class metrics, and the confusion matrix.

    Categories absent from the test set are excluded from the macro mean
    and reported in ``excluded``.
    """
    if not test_features:
        raise ValueError("empty test set")
    if len(test_features) != len(test_labels):
        raise ValueError(f"{len(test_features)} features but {len(test_labels)} labels")
    index: Mapping[PainCategory, int] = {c: i for i, c in enumerate(CATEGORIES)}
    confusion = np.zeros((len(CATEGORIES), len(CATEGORIES)), dtype=np.int64)
    for feat, truth in zip(test_features, test_labels):
        confusion[index[truth], index[predict(model, feat)]] += 1

    per_class = {c.value: _per_class(confusion, index[c]) for c in CATEGORIES}
    present = [c for c in CATEGORIES if per_class[c.value].support > 0]
    excluded = tuple(c.value for c in CATEGORIES if per_class[c.value].support == 0)
    if excluded:
        logger.info("categories absent from test set: %s", ", ".join(excluded))
    f1_macro = sum(per_class[c.value].f1 for c in present) / len(present)
    return ClassificationReport(
        accuracy=100.0 * float(np.trace(confusion)) / len(test_features),
        f1_macro=f1_macro,
        per_class=per_class,
        confusion=confusion,
        categories=tuple(c.value for c in CATEGORIES),
        excluded=excluded,
    )
