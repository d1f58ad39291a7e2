"""Batch pipeline commands behind the CLI: morph, eval, classify, synth.

Each command reads a manifest, processes images in manifest order, and
writes CSV/JSON (and optionally SVG) reports.  Per-image failures are
logged and skipped rather than aborting the batch; the returned exit
code follows the contract 0 = full success, 1 = partial (skips
occurred), 2 = configuration or input error (raised as ConfigError).
Every output file starts with a comment row naming the producing
command and a hash of the resolved configuration.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .contours import extract_contours, write_contours_csv
from .errors import OsteomorphError
from .knn import FEATURE_NAMES, FeatureVector, build_features, evaluate, fit_knn
from .masks import (
    BONE_CLASSES,
    CLASS_NAMES,
    DatasetManifest,
    LabelMask,
    ManifestEntry,
    load_manifest,
    load_mask,
    load_prob_map,
    resize_nearest,
    write_mask,
)
from .metrics import aggregate_metrics, confusion_counts, metrics_from_counts, sparse_ce_loss
from .shape import compute_shape_features, group_stats
from .synth import SyntheticSpec, paint

logger = logging.getLogger(__name__)

K_SWEEP = (1, 3, 5, 7, 9)


class ConfigError(OsteomorphError):
    """Bad configuration or unusable input; maps to exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    manifest: Path
    out: Path
    bones: tuple[int, ...] = BONE_CLASSES
    agg: str = "macro"
    k: int | None = None
    resize: tuple[int, int] | None = (640, 640)
    split: str = "all"
    plots: bool = False
    dump_contours: bool = False
    command: str = ""

    def hash(self) -> str:
        payload = "\n".join(
            f"{key}={getattr(self, key)}"
            for key in ("manifest", "bones", "agg", "k", "resize", "split", "plots",
                        "dump_contours", "command")
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def provenance(self) -> str:
        return f"osteomorph {self.command} config={self.hash()}"


@dataclass
class _Batch:
    """Shared per-run bookkeeping: loaded manifest and skip records."""

    config: RunConfig
    manifest: DatasetManifest
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def skip(self, image_id: str, reason: str) -> None:
        logger.warning("skipping %s: %s", image_id, reason)
        self.skipped.append((image_id, reason))

    def exit_code(self) -> int:
        return 1 if self.skipped else 0


def _open_batch(config: RunConfig) -> _Batch:
    try:
        manifest = load_manifest(config.manifest)
    except (OSError, OsteomorphError) as exc:
        raise ConfigError(f"cannot load manifest: {exc}") from exc
    config.out.mkdir(parents=True, exist_ok=True)
    return _Batch(config=config, manifest=manifest)


def _select(batch: _Batch) -> tuple[ManifestEntry, ...]:
    split = batch.config.split
    entries = batch.manifest.entries if split == "all" else batch.manifest.by_split(split)
    if not entries:
        raise ConfigError(f"no images selected (split={split!r})")
    return entries


def _load_resized(path: Path, config: RunConfig) -> LabelMask:
    mask = load_mask(path)
    if config.resize is not None:
        mask = resize_nearest(mask, *config.resize)
    return mask


def _write_csv(path: Path, provenance: str, header: str, rows: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def cmd_morph(config: RunConfig) -> int:
    """Per-image shape features, grouped stats, and optional SVG plots."""
    batch = _open_batch(config)
    entries = _select(batch)
    prov = config.provenance()

    feature_rows: list[str] = []
    grouped: list[tuple] = []
    for entry in entries:
        try:
            mask = _load_resized(entry.gt_mask, config)
        except (OSError, OsteomorphError) as exc:
            batch.skip(entry.image_id, str(exc))
            continue
        if config.dump_contours:
            contour_dir = config.out / "contours"
            contour_dir.mkdir(exist_ok=True)
        for class_id in config.bones:
            try:
                feat = compute_shape_features(mask, class_id)
            except OsteomorphError as exc:
                batch.skip(entry.image_id, f"{CLASS_NAMES[class_id]}: {exc}")
                continue
            category = entry.pain.category.value if entry.pain else ""
            feature_rows.append(
                f"{entry.image_id},{CLASS_NAMES[class_id]},{feat.area:.4f},"
                f"{feat.perimeter:.4f},{feat.circularity:.6f},{feat.semi_major_a:.4f},"
                f"{feat.semi_minor_b:.4f},{feat.eccentricity:.6f},{category}"
            )
            if entry.pain is not None:
                grouped.append((feat, entry.pain.category))
            if config.dump_contours:
                write_contours_csv(
                    extract_contours(mask, class_id),
                    contour_dir / f"{entry.image_id}_{CLASS_NAMES[class_id]}.csv",
                )

    _write_csv(
        config.out / "features.csv",
        prov,
        "image_id,bone,area_px2,perimeter_px,circularity,semi_major_px,semi_minor_px,"
        "eccentricity,pain_category",
        feature_rows,
    )

    stats = group_stats(grouped) if grouped else []
    _write_csv(
        config.out / "group_stats.csv",
        prov,
        "category,bone,metric,mean,std,n",
        [
            f"{s.category.value},{CLASS_NAMES[s.class_id]},{s.metric},"
            f"{s.mean:.6f},{s.std:.6f},{s.n}"
            for s in stats
        ],
    )
    if stats and config.plots:
        from .figures import render_group_stats

        render_group_stats(stats, config.out, prov)
    return batch.exit_code()


def cmd_eval(config: RunConfig) -> int:
    """Score predicted masks against ground truth per bone."""
    batch = _open_batch(config)
    entries = _select(batch)
    prov = config.provenance()
    mode = "macro" if config.agg == "macro" else "micro-counts"

    with_pred = [e for e in entries if e.pred_mask is not None]
    for entry in entries:
        if entry.pred_mask is None:
            batch.skip(entry.image_id, "no pred_mask in manifest")
    if not with_pred:
        raise ConfigError("no entries carry pred_mask paths")

    per_image_rows: list[str] = []
    per_bone: dict[int, dict[str, list]] = {
        cid: {"metrics": [], "counts": []} for cid in config.bones
    }
    ce_rows: list[str] = []
    for entry in with_pred:
        try:
            gt = _load_resized(entry.gt_mask, config)
            pred = _load_resized(entry.pred_mask, config)
        except (OSError, OsteomorphError) as exc:
            batch.skip(entry.image_id, str(exc))
            continue
        try:
            scored = [
                (class_id, confusion_counts(pred, gt, class_id))
                for class_id in config.bones
            ]
        except ValueError as exc:  # per-image dimension mismatch
            batch.skip(entry.image_id, str(exc))
            continue
        for class_id, counts in scored:
            m = metrics_from_counts(counts)
            per_bone[class_id]["metrics"].append(m)
            per_bone[class_id]["counts"].append(counts)
            flags = ";".join(m.degenerate)
            per_image_rows.append(
                f"{entry.image_id},{CLASS_NAMES[class_id]},{m.acc:.2f},{m.precision:.2f},"
                f"{m.recall:.2f},{m.dice:.2f},{m.iou:.2f},{flags}"
            )
        if entry.prob_map is not None:
            try:
                pm = load_prob_map(entry.prob_map)
                gt_for_ce = load_mask(entry.gt_mask)
                if (pm.width, pm.height) != (gt_for_ce.width, gt_for_ce.height):
                    raise OsteomorphError(
                        f"prob map {pm.width}x{pm.height} does not match "
                        f"gt {gt_for_ce.width}x{gt_for_ce.height}"
                    )
                ce_rows.append(f"{entry.image_id},{sparse_ce_loss(pm, gt_for_ce):.6f}")
            except (OSError, ValueError, OsteomorphError) as exc:
                batch.skip(entry.image_id, f"cross-entropy: {exc}")

    _write_csv(
        config.out / "metrics_per_image.csv",
        prov,
        "image_id,bone,acc,precision,recall,dice,iou,degenerate",
        per_image_rows,
    )

    agg_rows: list[str] = []
    for class_id in config.bones:
        scored = per_bone[class_id]["metrics"]
        if not scored:
            continue
        agg = aggregate_metrics(scored, mode=mode, counts=per_bone[class_id]["counts"])
        agg_rows.append(
            f"pred,{CLASS_NAMES[class_id]},{agg.acc:.2f},{agg.precision:.2f},"
            f"{agg.recall:.2f},{agg.dice:.2f},{agg.iou:.2f}"
        )
    _write_csv(
        config.out / "metrics.csv",
        f"{prov} agg={config.agg}",
        "model,bone,acc,precision,recall,dice,iou",
        agg_rows,
    )
    if ce_rows:
        _write_csv(config.out / "ce_loss.csv", prov, "image_id,ce_loss", ce_rows)
    return batch.exit_code()


def _features_for(
    batch: _Batch, entries: tuple[ManifestEntry, ...], which: str
) -> tuple[list[FeatureVector], dict[str, ManifestEntry]]:
    masks = []
    by_id = {}
    for entry in entries:
        path = entry.gt_mask if which == "gt" else entry.pred_mask
        try:
            masks.append((entry.image_id, _load_resized(path, batch.config)))
            by_id[entry.image_id] = entry
        except (OSError, OsteomorphError) as exc:
            batch.skip(entry.image_id, str(exc))
    vectors, skipped = build_features(masks)
    for image_id, reason in skipped:
        batch.skip(image_id, reason)
    return vectors, by_id


def _labels_for(vectors: list[FeatureVector], by_id: dict[str, ManifestEntry]):
    return [by_id[v.image_id].pain.category for v in vectors]


def _report_to_dict(report, chosen_k: int, dropped: tuple[int, ...], prov: str) -> dict:
    return {
        "provenance": prov,
        "accuracy": report.accuracy,
        "f1_macro": report.f1_macro,
        "chosen_k": chosen_k,
        "dropped_dimensions": [FEATURE_NAMES[i] for i in dropped],
        "excluded_categories": list(report.excluded),
        "per_class": {
            name: {
                "precision": pc.precision,
                "recall": pc.recall,
                "f1": pc.f1,
                "support": pc.support,
            }
            for name, pc in report.per_class.items()
        },
        "confusion": {
            "categories": list(report.categories),
            "matrix": report.confusion.tolist(),
        },
    }


def cmd_classify(config: RunConfig) -> int:
    """Fit KNN on train, pick k on val, and report test accuracy/F1.

    Runs once on ground-truth-mask features and, when the test split
    carries predicted masks, again with test features rebuilt from the
    predictions (the fitted classifier itself is unchanged).
    """
    batch = _open_batch(config)
    prov = config.provenance()

    split_entries = {}
    for split in ("train", "val", "test"):
        entries = tuple(e for e in batch.manifest.by_split(split) if e.pain is not None)
        for e in batch.manifest.by_split(split):
            if e.pain is None:
                batch.skip(e.image_id, "no pain record")
        if not entries:
            raise ConfigError(f"{split} split has no usable images")
        split_entries[split] = entries

    train_x, train_ids = _features_for(batch, split_entries["train"], "gt")
    val_x, val_ids = _features_for(batch, split_entries["val"], "gt")
    test_x, test_ids = _features_for(batch, split_entries["test"], "gt")
    for name, vectors in (("train", train_x), ("val", val_x), ("test", test_x)):
        if not vectors:
            raise ConfigError(f"{name} split has no usable images")
    train_y = _labels_for(train_x, train_ids)
    if len(set(train_y)) < 2:
        raise ConfigError("degenerate training labels: train split has a single class")

    if config.k is not None:
        if not 1 <= config.k <= len(train_x):
            raise ConfigError(f"k={config.k} out of range for {len(train_x)} training images")
        chosen_k = config.k
    else:
        val_y = _labels_for(val_x, val_ids)
        best = None
        for k in K_SWEEP:
            if k > len(train_x):
                break
            model = fit_knn(train_x, train_y, k)
            acc = evaluate(model, val_x, val_y).accuracy
            if best is None or acc > best[1]:
                best = (k, acc)
        chosen_k = best[0]
        logger.info("selected k=%d (validation accuracy %.2f)", chosen_k, best[1])

    model = fit_knn(train_x, train_y, chosen_k)
    test_y = _labels_for(test_x, test_ids)
    reports = {"gt": evaluate(model, test_x, test_y)}

    pred_entries = tuple(e for e in split_entries["test"] if e.pred_mask is not None)
    if pred_entries:
        if len(pred_entries) < len(split_entries["test"]):
            logger.info(
                "pred run covers %d of %d test images (missing pred_mask elsewhere)",
                len(pred_entries), len(split_entries["test"]),
            )
        pred_x, pred_ids = _features_for(batch, pred_entries, "pred")
        if pred_x:
            reports["pred"] = evaluate(model, pred_x, _labels_for(pred_x, pred_ids))

    csv_rows = []
    for source in ("gt", "pred"):
        if source not in reports:
            continue
        payload = _report_to_dict(reports[source], chosen_k, model.dropped_dims, prov)
        with open(config.out / f"classification_{source}.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        csv_rows.append(
            f"{source},{reports[source].accuracy:.2f},{reports[source].f1_macro:.2f}"
        )
    _write_csv(config.out / "classification.csv", prov, "source,acc,f1", csv_rows)
    return batch.exit_code()


def cmd_synth(spec: SyntheticSpec, out: Path) -> None:
    """Rasterize one synthetic shape and write it as a mask file."""
    out.parent.mkdir(parents=True, exist_ok=True)
    write_mask(paint(spec), out)
