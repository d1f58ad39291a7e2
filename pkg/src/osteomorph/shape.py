"""Per-bone 2D shape descriptors and group statistics.

Circularity is 4*pi*Area/Perimeter^2 over the largest outer contour.
Semi-axes come from the central second moments of the pixel set (the
ellipse with identical normalized second central moments), so a filled
disk of radius r yields a and b close to r, and eccentricity is
sqrt(1 - (b/a)^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from .contours import extract_contours, largest_contour, polygon_area, polygon_perimeter
from .errors import DegenerateShapeError, MissingClassError
from .masks import CATEGORIES, LabelMask, PainCategory

# Component labeling uses 8-connectivity to match the saddle rule in the
# contour tracer (foreground diagonals connect).
_CONNECTIVITY = np.ones((3, 3), dtype=int)

METRIC_NAMES = ("circularity", "eccentricity")


@dataclass(frozen=True)
class ShapeFeatures:
    class_id: int
    area: float
    perimeter: float
    circularity: float
    semi_major_a: float
    semi_minor_b: float
    eccentricity: float
    centroid: tuple[float, float]


@dataclass(frozen=True)
class GroupStats:
    category: PainCategory
    class_id: int
    metric: str
    mean: float
    std: float
    n: int


def circularity(area: float, perimeter: float) -> float:
    """How round a shape is: 1 for a perfect circle, lower when elongated."""
    if area <= 0:
        raise ValueError(f"area must be positive, got {area}")
    if perimeter <= 0:
        raise ValueError(f"perimeter must be positive, got {perimeter}")
    return 4.0 * math.pi * area / perimeter**2


def eccentricity(a: float, b: float) -> float:
    """Deviation from a circle: 0 for a == b, approaching 1 for a line."""
    if b <= 0:
        raise ValueError(f"semi-minor axis must be positive, got {b}")
    if b > a:
        raise ValueError(f"semi-major axis {a} smaller than semi-minor {b}")
    return math.sqrt(1.0 - (b / a) ** 2)


def _axes_from_points(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float, tuple[float, float]]:
    if xs.size < 2:
        raise DegenerateShapeError(f"ellipse fit needs at least 2 pixels, got {xs.size}")
    cx = float(xs.mean())
    cy = float(ys.mean())
    dx = xs - cx
    dy = ys - cy
    mu20 = float(np.mean(dx * dx))
    mu02 = float(np.mean(dy * dy))
    mu11 = float(np.mean(dx * dy))
    half_trace = 0.5 * (mu20 + mu02)
    spread = math.hypot(0.5 * (mu20 - mu02), mu11)
    lam1 = half_trace + spread
    lam2 = half_trace - spread
    if lam2 <= 1e-12 * max(lam1, 1.0):
        raise DegenerateShapeError("pixel set is collinear (zero minor-axis variance)")
    return 2.0 * math.sqrt(lam1), 2.0 * math.sqrt(lam2), (cx, cy)


def fit_ellipse_moments(mask: LabelMask, class_id: int) -> tuple[float, float, tuple[float, float]]:
    """Semi-axes (a, b) and centroid of the moment-equivalent ellipse.

    Uses every pixel of ``class_id``; raises DegenerateShapeError for
    fewer than 2 pixels or a collinear pixel set.
    """
    ys, xs = np.nonzero(mask.labels == class_id)
    return _axes_from_points(xs.astype(np.float64), ys.astype(np.float64))


def _component_of_contour(indicator: np.ndarray, contour) -> np.ndarray:
    # A contour vertex lies on the edge between one foreground and one
    # background pixel center; recover the foreground pixel to identify
    # the connected component the contour belongs to.
    comp_labels, _ = ndimage.label(indicator, structure=_CONNECTIVITY)
    x, y = contour.vertices[0]
    h, w = indicator.shape
    for px, py in ((math.floor(x), round(y)), (math.ceil(x), round(y)),
                   (round(x), math.floor(y)), (round(x), math.ceil(y))):
        if 0 <= px < w and 0 <= py < h and indicator[py, px]:
            return comp_labels == comp_labels[py, px]
    raise RuntimeError("contour vertex not adjacent to any foreground pixel")


def compute_shape_features(mask: LabelMask, class_id: int) -> ShapeFeatures:
    """Full shape record for one bone class.

    Area and perimeter come from the largest outer contour; the moment
    ellipse is fitted on the full pixel set of the component that owns
    that contour, so holes and satellite blobs do not contaminate the
    descriptors.
    """
    indicator = mask.labels == class_id
    if not indicator.any():
        raise MissingClassError(f"mask has no pixels of class {class_id}")
    contours = extract_contours(mask, class_id)
    outer = largest_contour(contours)
    area = polygon_area(outer)
    perimeter = polygon_perimeter(outer)
    component = _component_of_contour(indicator, outer)
    ys, xs = np.nonzero(component)
    a, b, centroid = _axes_from_points(xs.astype(np.float64), ys.astype(np.float64))
    return ShapeFeatures(
        class_id=class_id,
        area=area,
        perimeter=perimeter,
        circularity=circularity(area, perimeter),
        semi_major_a=a,
        semi_minor_b=b,
        eccentricity=eccentricity(a, b),
        centroid=centroid,
    )


def group_stats(
    features: Iterable[tuple[ShapeFeatures, PainCategory]]
) -> list[GroupStats]:
    """Mean and sample std of each metric per (bone, pain category).

    Deterministic regardless of input order: rows are sorted by bone,
    then category (Worsened, Improved, NoChange), then metric.  Sample
    standard deviation uses the n-1 denominator; a singleton group gets
    std = 0.
    """
    groups: dict[tuple[int, PainCategory], dict[str, list[float]]] = {}
    for feat, category in features:
        g = groups.setdefault((feat.class_id, category), {m: [] for m in METRIC_NAMES})
        g["circularity"].append(feat.circularity)
        g["eccentricity"].append(feat.eccentricity)
    if not groups:
        raise ValueError("no features to aggregate")

    cat_order = {c: i for i, c in enumerate(CATEGORIES)}
    rows: list[GroupStats] = []
    for class_id, category in sorted(groups, key=lambda k: (k[0], cat_order[k[1]])):
        for metric in METRIC_NAMES:
            # Sorting fixes the accumulation order, so the reduction is
            # bit-identical no matter how the input was ordered.
            values = np.sort(np.asarray(groups[(class_id, category)][metric], dtype=np.float64))
            std = float(values.std(ddof=1)) if values.size > 1 else 0.0
            rows.append(
                GroupStats(
                    category=category,
                    class_id=class_id,
                    metric=metric,
                    mean=float(values.mean()),
                    std=std,
                    n=int(values.size),
                )
            )
    return rows
