"""Mask, probability-map, pain-score, and manifest ingestion.

Label masks are 8-bit single-channel images (PNG or PGM) whose pixel
values are the class labels directly: 0 background, 1 femur, 2 tibia.
Probability maps use a flat binary format: three little-endian uint32
(width, height, classes) followed by float32 data, row-major with the
class index innermost.

All loaders are pure functions of file contents and return immutable
records, so batch ingestion can run file-parallel without coordination.
"""

from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ManifestError, MaskError, ProbMapError

BACKGROUND = 0
FEMUR = 1
TIBIA = 2
VALID_LABELS = (BACKGROUND, FEMUR, TIBIA)
BONE_CLASSES = (FEMUR, TIBIA)
CLASS_NAMES = {FEMUR: "femur", TIBIA: "tibia"}
CLASS_IDS = {name: cid for cid, name in CLASS_NAMES.items()}

SPLITS = ("train", "val", "test")

MANIFEST_COLUMNS = (
    "image_id",
    "gt_mask",
    "pred_mask",
    "prob_map",
    "split",
    "baseline_pain",
    "followup_pain",
)


@dataclass(frozen=True, eq=False)
class LabelMask:
    """2D grid of integer class labels, one per pixel.

    ``labels`` is a ``(height, width)`` uint8 array; every entry must be
    one of ``VALID_LABELS``.
    """

    width: int
    height: int
    labels: np.ndarray

    def class_pixels(self, class_id: int) -> int:
        return int(np.count_nonzero(self.labels == class_id))


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Per-pixel class probability vectors, shape ``(height, width, classes)``."""

    width: int
    height: int
    classes: int
    probs: np.ndarray


class PainCategory(enum.Enum):
    WORSENED = "Worsened"
    IMPROVED = "Improved"
    NO_CHANGE = "NoChange"


# Fixed reporting order for stats, confusion matrices, and file output.
CATEGORIES = (PainCategory.WORSENED, PainCategory.IMPROVED, PainCategory.NO_CHANGE)


def categorize_pain(baseline: int, followup: int) -> PainCategory:
    """Classify a 12-month pain change from two integer scores.

    A change of +2 or more is Worsened, -2 or less is Improved, anything
    in between is NoChange.  Total on all integer pairs.
    """
    delta = followup - baseline
    if delta >= 2:
        return PainCategory.WORSENED
    if delta <= -2:
        return PainCategory.IMPROVED
    return PainCategory.NO_CHANGE


@dataclass(frozen=True)
class PainRecord:
    subject_id: str
    baseline_pain: int
    followup_pain: int
    category: PainCategory

    @classmethod
    def from_scores(cls, subject_id: str, baseline: int, followup: int) -> "PainRecord":
        return cls(subject_id, baseline, followup, categorize_pain(baseline, followup))


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    gt_mask: Path
    pred_mask: Path | None
    prob_map: Path | None
    split: str
    pain: PainRecord | None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def by_split(self, split: str) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split == split)


def load_mask(path: str | Path) -> LabelMask:
    """Read an 8-bit single-channel mask image; pixel value == class label.

    Raises MaskError for unreadable files, non-grayscale modes, or any
    pixel value outside ``VALID_LABELS`` (named with its coordinates).
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise MaskError(f"{path}: expected 8-bit single-channel image, got mode {img.mode!r}")
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise MaskError(f"{path}: unreadable image ({exc})") from exc
    bad = arr > max(VALID_LABELS)
    if bad.any():
        y, x = np.argwhere(bad)[0]
        raise MaskError(f"{path}: invalid label {int(arr[y, x])} at (x={int(x)}, y={int(y)})")
    h, w = arr.shape
    return LabelMask(width=w, height=h, labels=arr)


def write_mask(mask: LabelMask, path: str | Path) -> None:
    """Write a mask as PNG or PGM depending on the file suffix."""
    Image.fromarray(mask.labels, mode="L").save(Path(path))


def resize_nearest(mask: LabelMask, target_w: int, target_h: int) -> LabelMask:
    """Nearest-neighbor resize; never introduces labels absent from the input."""
    if target_w <= 0 or target_h <= 0:
        raise ValueError(f"target dimensions must be positive, got {target_w}x{target_h}")
    rows = np.floor((np.arange(target_h) + 0.5) * mask.height / target_h).astype(np.intp)
    cols = np.floor((np.arange(target_w) + 0.5) * mask.width / target_w).astype(np.intp)
    rows = np.clip(rows, 0, mask.height - 1)
    cols = np.clip(cols, 0, mask.width - 1)
    return LabelMask(width=target_w, height=target_h, labels=mask.labels[np.ix_(rows, cols)].copy())


_PROB_HEADER = struct.Struct("<III")


def load_prob_map(path: str | Path) -> ProbabilityMap:
    """Read the flat binary probability-map format.

    Validates the payload size, non-negativity, and that every per-pixel
    vector sums to 1 within 1e-6.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _PROB_HEADER.size:
        raise ProbMapError(f"{path}: truncated header")
    w, h, c = _PROB_HEADER.unpack_from(raw)
    if c < 2:
        raise ProbMapError(f"{path}: needs at least 2 classes, header says {c}")
    expected = _PROB_HEADER.size + 4 * w * h * c
    if len(raw) != expected:
        raise ProbMapError(f"{path}: payload is {len(raw)} bytes, expected {expected}")
    probs = np.frombuffer(raw, dtype="<f4", offset=_PROB_HEADER.size).reshape(h, w, c)
    if (probs < 0).any():
        y, x, _ = np.argwhere(probs < 0)[0]
        raise ProbMapError(f"{path}: negative probability at (x={int(x)}, y={int(y)})")
    sums = probs.sum(axis=2, dtype=np.float64)
    off = np.abs(sums - 1.0) > 1e-6
    if off.any():
        y, x = np.argwhere(off)[0]
        raise ProbMapError(
            f"{path}: probabilities at (x={int(x)}, y={int(y)}) sum to {sums[y, x]:.8f}"
        )
    return ProbabilityMap(width=w, height=h, classes=c, probs=probs)


def write_prob_map(pm: ProbabilityMap, path: str | Path) -> None:
    payload = np.ascontiguousarray(pm.probs, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_PROB_HEADER.pack(pm.width, pm.height, pm.classes))
        fh.write(payload.tobytes())


def _parse_pain(image_id: str, baseline: str, followup: str, line: int) -> PainRecord | None:
    if not baseline and not followup:
        return None
    if not baseline or not followup:
        raise ManifestError(
            f"pain scores must be given together for {image_id!r}", line=line
        )
    try:
        return PainRecord.from_scores(image_id, int(baseline), int(followup))
    except ValueError as exc:
        raise ManifestError(f"non-integer pain score for {image_id!r}", line=line) from exc


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse the CSV manifest; relative paths resolve against its directory.

    Raises ManifestError (with a line number where applicable) for a bad
    header, malformed rows, unknown split tokens, or duplicate image ids.
    """
    path = Path(path)
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest") from None
        if tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"{path}: header must be {','.join(MANIFEST_COLUMNS)}", line=1
            )
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise ManifestError(
                    f"expected {len(MANIFEST_COLUMNS)} fields, got {len(row)}", line=line
                )
            image_id, gt, pred, prob, split, base_pain, follow_pain = (f.strip() for f in row)
            if not image_id:
                raise ManifestError("empty image_id", line=line)
            if image_id in seen:
                raise ManifestError(f"duplicate image_id {image_id!r}", line=line)
            seen.add(image_id)
            if not gt:
                raise ManifestError(f"missing gt_mask for {image_id!r}", line=line)
            if split not in SPLITS:
                raise ManifestError(
                    f"unknown split {split!r} (expected one of {', '.join(SPLITS)})", line=line
                )
            entries.append(
                ManifestEntry(
                    image_id=image_id,
                    gt_mask=base / gt,
                    pred_mask=base / pred if pred else None,
                    prob_map=base / prob if prob else None,
                    split=split,
                    pain=_parse_pain(image_id, base_pain, follow_pain, line),
                )
            )
    return DatasetManifest(entries=tuple(entries))
