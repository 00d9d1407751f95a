"""Black-border removal and aspect-preserving rescale for lesion images.

Border detection scans from each edge inward and drops rows/columns
whose mean luminance falls below a threshold; an over-trim guard keeps
the full frame whenever the detected box would be degenerate or retain
less than ``min_keep`` of the area. Outputs are written as PNG so later
stages never see recompression drift.
"""

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image
from sklearn.base import BaseEstimator, TransformerMixin

from .datamodel import Manifest
from .validation import check_image

# Rec. 601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass(frozen=True)
class ContentBox:
    """Retained region, right/bottom exclusive."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if not (0 <= self.left < self.right and 0 <= self.top < self.bottom):
            raise ValueError(f"degenerate box {self}")

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    def is_full(self, img: np.ndarray) -> bool:
        h, w = img.shape[:2]
        return (self.left, self.top, self.right, self.bottom) == (0, 0, w, h)


def luminance(img) -> np.ndarray:
    """Per-pixel luma (0.299 R + 0.587 G + 0.114 B), float64 in [0, 255]."""
    img = check_image(img)
    return img.astype(np.float64) @ _LUMA


def detect_content_box(img, threshold: float = 20.0, min_keep: float = 0.25) -> ContentBox:
    """Locate the content region inside a dark frame.

    Edge rows and columns whose mean luminance is below ``threshold``
    count as border. Falls back to the full frame when everything looks
    like border or the remaining area drops under ``min_keep`` of the
    original.
    """
    img = check_image(img)
    if not 0.0 <= threshold <= 255.0:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    if not 0.0 < min_keep <= 1.0:
        raise ValueError(f"min_keep must be in (0, 1], got {min_keep}")
    h, w = img.shape[:2]
    full = ContentBox(0, 0, w, h)
    luma = luminance(img)
    row_dark = luma.mean(axis=1) < threshold
    col_dark = luma.mean(axis=0) < threshold
    if row_dark.all() or col_dark.all():
        return full

    def first_bright(dark) -> int:
        return int(np.argmin(dark))  # first False

    top = first_bright(row_dark)
    bottom = len(row_dark) - first_bright(row_dark[::-1])
    left = first_bright(col_dark)
    right = len(col_dark) - first_bright(col_dark[::-1])
    box = ContentBox(left, top, right, bottom)
    if box.width * box.height < min_keep * (w * h):
        return full
    return box


def trim_borders(img, box: ContentBox) -> np.ndarray:
    """Crop ``img`` to ``box`` (verbatim pixel copy)."""
    img = check_image(img)
    h, w = img.shape[:2]
    if box.right > w or box.bottom > h:
        raise ValueError(f"box {box} exceeds image {w}x{h}")
    return img[box.top : box.bottom, box.left : box.right].copy()


def resize_aspect(img, target_short_side: int) -> np.ndarray:
    """Bilinear resize so the shorter side equals ``target_short_side``.

    The longer side scales by the same factor (rounded); images already
    at the target pass through untouched.
    """
    img = check_image(img)
    if target_short_side < 1:
        raise ValueError(f"target_short_side must be >= 1, got {target_short_side}")
    h, w = img.shape[:2]
    short = min(h, w)
    if short == target_short_side:
        return img
    scale = target_short_side / short
    new_w = target_short_side if w == short else max(1, round(w * scale))
    new_h = target_short_side if h == short else max(1, round(h * scale))
    resized = Image.fromarray(img).resize((new_w, new_h), resample=Image.BILINEAR)
    return np.asarray(resized, dtype=np.uint8)


def crop_bottom(img, fraction: float) -> np.ndarray:
    """Drop the bottom ``fraction`` of rows (caption strips in some sources)."""
    img = check_image(img)
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    if fraction == 0.0:
        return img
    h = img.shape[0]
    keep = max(1, h - int(round(h * fraction)))
    return img[:keep].copy()


@dataclass(frozen=True)
class BatchResult:
    manifest: Manifest
    boxes: tuple  # (input path, ContentBox) per processed image
    failures: tuple  # (input path, reason) per skipped image

    @property
    def ok(self) -> bool:
        return not self.failures


def preprocess_batch(
    manifest: Manifest,
    out_dir,
    threshold: float = 20.0,
    min_keep: float = 0.25,
    target_short_side: int | None = None,
    bottom_crop: float = 0.0,
    bottom_crop_sources: tuple = (),
) -> BatchResult:
    """Trim, optionally rescale and re-encode every manifest image.

    Corrupt or unreadable files are recorded as failures and skipped;
    the returned manifest lists only successful outputs, in input
    order. A ``boxes.csv`` log of detected boxes is written next to the
    images.
    """
    manifest.check_unique_paths()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stems = [Path(r.path).stem for r in manifest]
    if len(set(stems)) != len(stems):
        dupes = sorted({s for s in stems if stems.count(s) > 1})
        raise ValueError(f"output name collision for stems: {', '.join(dupes)}")

    records = []
    boxes = []
    failures = []
    for record in manifest:
        src = Path(record.path)
        try:
            with Image.open(src) as handle:
                img = np.asarray(handle.convert("RGB"), dtype=np.uint8)
        except (OSError, ValueError) as exc:
            failures.append((record.path, str(exc)))
            continue
        if bottom_crop and (not bottom_crop_sources or record.source in bottom_crop_sources):
            img = crop_bottom(img, bottom_crop)
        box = detect_content_box(img, threshold=threshold, min_keep=min_keep)
        img = trim_borders(img, box)
        if target_short_side is not None:
            img = resize_aspect(img, target_short_side)
        out_path = out_dir / f"{src.stem}.png"
        Image.fromarray(img).save(out_path, format="PNG")
        boxes.append((record.path, box))
        records.append(replace(record, path=str(out_path)))

    result = BatchResult(Manifest(tuple(records)), tuple(boxes), tuple(failures))
    write_box_log(result.boxes, out_dir / "boxes.csv")
    return result


def write_box_log(boxes, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("path", "left", "top", "right", "bottom"))
        for img_path, box in boxes:
            writer.writerow((img_path, box.left, box.top, box.right, box.bottom))


class BorderTrimmer(BaseEstimator, TransformerMixin):
    """Stateless transformer wrapping trim + rescale for image lists.

    fit is a no-op (kept for pipeline compatibility); transform maps a
    sequence of HxWx3 uint8 arrays to their trimmed, optionally rescaled
    counterparts.
    """

    def __init__(self, threshold: float = 20.0, min_keep: float = 0.25,
                 target_short_side: int | None = None):
        self.threshold = threshold
        self.min_keep = min_keep
        self.target_short_side = target_short_side

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        out = []
        for img in X:
            box = detect_content_box(img, threshold=self.threshold, min_keep=self.min_keep)
            trimmed = trim_borders(img, box)
            if self.target_short_side is not None:
                trimmed = resize_aspect(trimmed, self.target_short_side)
            out.append(trimmed)
        return out
