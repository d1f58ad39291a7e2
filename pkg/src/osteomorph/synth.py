"""Synthetic mask generation for tests and demos.

Disks and ellipses are rasterized by a pixel-center inclusion test
(center inside or on the analytic boundary).  Rectangles use half-open
bounds so an integer-sized rectangle covers exactly width x height
pixels regardless of where it is centered.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .masks import (
    CATEGORIES,
    FEMUR,
    TIBIA,
    LabelMask,
    PainCategory,
    ProbabilityMap,
    write_mask,
    write_prob_map,
)

SHAPE_KINDS = ("disk", "ellipse", "rect")


@dataclass(frozen=True)
class SyntheticSpec:
    shape: str  # disk | ellipse | rect
    params: tuple[float, ...]  # (r,) | (a, b) | (w, h)
    center: tuple[float, float]
    label: int
    canvas: tuple[int, int]  # (width, height)


def _check_fits(spec: SyntheticSpec, half_w: float, half_h: float) -> None:
    cx, cy = spec.center
    w, h = spec.canvas
    # Pixel squares cover [-0.5, size - 0.5] along each axis.
    if cx - half_w < -0.5 or cx + half_w > w - 0.5 or cy - half_h < -0.5 or cy + half_h > h - 0.5:
        raise ValueError(
            f"{spec.shape} with extent {2 * half_w:g}x{2 * half_h:g} at {spec.center} "
            f"exceeds {w}x{h} canvas"
        )


def rasterize(spec: SyntheticSpec) -> np.ndarray:
    """Boolean foreground grid for one shape; raises if it exceeds the canvas."""
    if spec.shape not in SHAPE_KINDS:
        raise ValueError(f"unknown shape {spec.shape!r}")
    w, h = spec.canvas
    cx, cy = spec.center
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    if spec.shape == "disk":
        (r,) = spec.params
        _check_fits(spec, r, r)
        return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    if spec.shape == "ellipse":
        a, b = spec.params
        _check_fits(spec, a, b)
        return ((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2 <= 1.0
    rw, rh = spec.params
    _check_fits(spec, rw / 2, rh / 2)
    return (
        (xx >= cx - rw / 2) & (xx < cx + rw / 2) & (yy >= cy - rh / 2) & (yy < cy + rh / 2)
    )


def paint(spec: SyntheticSpec, base: LabelMask | None = None) -> LabelMask:
    """Paint the shape's label onto ``base`` (or a fresh background canvas)."""
    w, h = spec.canvas
    if base is None:
        labels = np.zeros((h, w), dtype=np.uint8)
    else:
        if (base.width, base.height) != (w, h):
            raise ValueError("base mask dimensions disagree with the shape canvas")
        labels = base.labels.copy()
    labels[rasterize(spec)] = spec.label
    return LabelMask(width=w, height=h, labels=labels)


def _ellipse_axes(semi_major: float, ecc: float) -> tuple[float, float]:
    return semi_major, semi_major * math.sqrt(1.0 - ecc * ecc)


# Per-category femur eccentricity bands: Worsened bones are built rounder,
# NoChange bones more elongated, so the pain categories are separable from
# shape alone and the grouped stats point the documented direction.
_FEMUR_ECC = {
    PainCategory.WORSENED: 0.20,
    PainCategory.IMPROVED: 0.55,
    PainCategory.NO_CHANGE: 0.85,
}
_PAIN_SCORES = {
    PainCategory.WORSENED: (3, 5),
    PainCategory.IMPROVED: (5, 3),
    PainCategory.NO_CHANGE: (4, 4),
}


def make_demo_dataset(
    out_dir: str | Path,
    n_images: int = 12,
    canvas: tuple[int, int] = (640, 640),
    seed: int = 0,
    with_prob_maps: bool = False,
    perfect_pred: bool = True,
) -> Path:
    """Write a self-contained synthetic dataset and return the manifest path.

    Each image holds a femur ellipse (eccentricity set by its pain
    category) and a mildly jittered tibia ellipse.  Predicted masks are
    copies of the ground truth when ``perfect_pred``.  Splits cycle so
    train/val/test each see every category once n_images >= 9.
    """
    out_dir = Path(out_dir)
    mask_dir = out_dir / "masks"
    mask_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    w, h = canvas

    rows = []
    for i in range(n_images):
        category = CATEGORIES[i % len(CATEGORIES)]
        split = "train" if i < n_images // 2 else ("val" if i < 3 * n_images // 4 else "test")
        scale = min(w, h) / 640.0
        femur_a = 150.0 * scale * (1.0 + 0.04 * rng.uniform(-1, 1))
        femur_ecc = min(_FEMUR_ECC[category] + 0.02 * rng.uniform(-1, 1), 0.95)
        tibia_a = 120.0 * scale * (1.0 + 0.05 * rng.uniform(-1, 1))
        tibia_b = 80.0 * scale * (1.0 + 0.05 * rng.uniform(-1, 1))
        mask = paint(
            SyntheticSpec(
                "ellipse", _ellipse_axes(femur_a, femur_ecc),
                ((w - 1) / 2, (h - 1) / 2 - 0.22 * h), FEMUR, canvas,
            )
        )
        mask = paint(
            SyntheticSpec(
                "ellipse", (tibia_a, tibia_b),
                ((w - 1) / 2, (h - 1) / 2 + 0.3 * h), TIBIA, canvas,
            ),
            base=mask,
        )
        image_id = f"img{i:03d}"
        gt_path = mask_dir / f"{image_id}_gt.png"
        write_mask(mask, gt_path)
        pred_rel = ""
        if perfect_pred:
            pred_path = mask_dir / f"{image_id}_pred.png"
            write_mask(mask, pred_path)
            pred_rel = f"masks/{image_id}_pred.png"
        prob_rel = ""
        if with_prob_maps:
            probs = np.full((h, w, 3), 0.05, dtype=np.float32)
            flat = probs.reshape(-1, 3)
            flat[np.arange(flat.shape[0]), mask.labels.reshape(-1)] = 0.90
            prob_path = mask_dir / f"{image_id}.prob"
            write_prob_map(ProbabilityMap(w, h, 3, probs), prob_path)
            prob_rel = f"masks/{image_id}.prob"
        baseline, followup = _PAIN_SCORES[category]
        rows.append(
            (image_id, f"masks/{image_id}_gt.png", pred_rel, prob_rel, split,
             str(baseline), str(followup))
        )

    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["image_id", "gt_mask", "pred_mask", "prob_map", "split",
             "baseline_pain", "followup_pain"]
        )
        writer.writerows(rows)
    return manifest_path
