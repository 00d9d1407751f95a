"""CSV readers and writers for the interchange formats.

Prediction and ground-truth files are UTF-8, comma-separated, LF line
endings, with the header ``image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC,UNK``.
Manifest files use the header ``path,source,label,split`` and class
count files use ``category,count``.

Confidences are written with ``repr`` (shortest exact round-trip
formatting), so parse(write(x)) reproduces every value bit for bit.
Row numbers in error messages are 1-based and include the header row.
"""

import csv
import math
from pathlib import Path

import numpy as np

from .categories import CATEGORY_NAMES, Category, N_CATEGORIES
from .datamodel import ClassCounts, GroundTruthSet, Manifest, ManifestRecord, PredictionSet
from .exceptions import FormatError

PREDICTION_HEADER = ("image",) + CATEGORY_NAMES
MANIFEST_HEADER = ("path", "source", "label", "split")
COUNTS_HEADER = ("category", "count")


def _read_rows(path) -> list[list[str]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return [row for row in csv.reader(fh)]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _check_header(rows: list[list[str]], expected: tuple[str, ...], path) -> None:
    if not rows:
        raise FormatError(f"{path}: empty file, expected header {','.join(expected)}")
    if tuple(rows[0]) != expected:
        raise FormatError(
            f"{path}: bad header {','.join(rows[0])!r}, expected {','.join(expected)!r}"
        )


def _parse_confidence_rows(rows, path):
    """Shared id + 9-value row parsing for prediction-shaped files."""
    ids: list[str] = []
    seen: set[str] = set()
    values = np.empty((len(rows) - 1, N_CATEGORIES), dtype=np.float64)
    for k, row in enumerate(rows[1:]):
        rownum = k + 2  # header is row 1
        if len(row) != N_CATEGORIES + 1:
            raise FormatError(
                f"{path}: row {rownum} has {len(row)} fields, expected {N_CATEGORIES + 1}"
            )
        image_id = row[0]
        if not image_id:
            raise FormatError(f"{path}: missing image id at row {rownum}")
        if image_id in seen:
            raise FormatError(f"{path}: duplicate image id {image_id!r} at row {rownum}")
        seen.add(image_id)
        ids.append(image_id)
        for j, cell in enumerate(row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise FormatError(
                    f"{path}: non-numeric confidence {cell!r} at row {rownum}"
                ) from None
            if math.isnan(v) or math.isinf(v):
                raise FormatError(f"{path}: non-finite confidence at row {rownum}")
            if v < 0:
                raise FormatError(f"{path}: negative confidence at row {rownum}")
            values[k, j] = v
    return tuple(ids), values


def parse_predictions(path) -> PredictionSet:
    """Read a prediction CSV, preserving file row order."""
    rows = _read_rows(path)
    _check_header(rows, PREDICTION_HEADER, path)
    ids, values = _parse_confidence_rows(rows, path)
    return PredictionSet(ids, values)


def write_predictions(preds: PredictionSet, path) -> None:
    """Write a prediction CSV that parses back to an identical set."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for image_id, row in zip(preds.image_ids, preds.values):
            writer.writerow([image_id] + [repr(float(v)) for v in row])


def parse_ground_truth(path) -> GroundTruthSet:
    """Read a one-hot ground-truth CSV into per-image labels."""
    rows = _read_rows(path)
    _check_header(rows, PREDICTION_HEADER, path)
    ids, values = _parse_confidence_rows(rows, path)
    labels = np.empty(len(ids), dtype=np.int64)
    for k, row in enumerate(values):
        ones = np.flatnonzero(row == 1.0)
        if len(ones) != 1 or not np.all(np.isin(row, (0.0, 1.0))):
            raise FormatError(f"{path}: row {k + 2} is not one-hot")
        labels[k] = ones[0]
    return GroundTruthSet(ids, labels)


def write_ground_truth(truth: GroundTruthSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for image_id, label in zip(truth.image_ids, truth.labels):
            row = ["0.0"] * N_CATEGORIES
            row[int(label)] = "1.0"
            writer.writerow([image_id] + row)


def read_manifest(path) -> Manifest:
    rows = _read_rows(path)
    _check_header(rows, MANIFEST_HEADER, path)
    records = []
    for k, row in enumerate(rows[1:]):
        rownum = k + 2
        if len(row) != len(MANIFEST_HEADER):
            raise FormatError(
                f"{path}: row {rownum} has {len(row)} fields, expected {len(MANIFEST_HEADER)}"
            )
        rec_path, source, label, split = row
        try:
            record = ManifestRecord(rec_path, source, Category.from_name(label), split)
        except (ValueError, FormatError) as exc:
            raise FormatError(f"{path}: row {rownum}: {exc}") from None
        records.append(record)
    # duplicate paths stay legal here: oversampled manifests repeat records
    return Manifest(tuple(records))


def write_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in manifest:
            writer.writerow([r.path, r.source, r.label.name, r.split])


def read_class_counts(path) -> ClassCounts:
    """Read a ``category,count`` CSV with all 9 categories in canonical order."""
    rows = _read_rows(path)
    _check_header(rows, COUNTS_HEADER, path)
    if len(rows) - 1 != N_CATEGORIES:
        raise FormatError(
            f"{path}: expected {N_CATEGORIES} count rows, got {len(rows) - 1}"
        )
    counts = np.empty(N_CATEGORIES, dtype=np.int64)
    for k, row in enumerate(rows[1:]):
        rownum = k + 2
        if len(row) != 2:
            raise FormatError(f"{path}: row {rownum} has {len(row)} fields, expected 2")
        name, cell = row
        if name != CATEGORY_NAMES[k]:
            raise FormatError(
                f"{path}: row {rownum} names {name!r}, expected {CATEGORY_NAMES[k]!r}"
            )
        try:
            counts[k] = int(cell)
        except ValueError:
            raise FormatError(f"{path}: non-integer count {cell!r} at row {rownum}") from None
    return ClassCounts(counts)


def write_class_counts(counts: ClassCounts, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COUNTS_HEADER)
        for name, n in zip(CATEGORY_NAMES, counts.counts):
            writer.writerow([name, int(n)])


WEIGHTS_HEADER = ("category", "weight")


def read_weights(path) -> np.ndarray:
    rows = _read_rows(path)
    _check_header(rows, WEIGHTS_HEADER, path)
    if len(rows) - 1 != N_CATEGORIES:
        raise FormatError(f"{path}: expected {N_CATEGORIES} weight rows, got {len(rows) - 1}")
    weights = np.empty(N_CATEGORIES, dtype=np.float64)
    for k, row in enumerate(rows[1:]):
        rownum = k + 2
        if len(row) != 2:
            raise FormatError(f"{path}: row {rownum} has {len(row)} fields, expected 2")
        name, cell = row
        if name != CATEGORY_NAMES[k]:
            raise FormatError(
                f"{path}: row {rownum} names {name!r}, expected {CATEGORY_NAMES[k]!r}"
            )
        try:
            weights[k] = float(cell)
        except ValueError:
            raise FormatError(f"{path}: non-numeric weight {cell!r} at row {rownum}") from None
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise FormatError(f"{path}: weights must be finite and > 0")
    return weights


def write_weights(weights, path) -> None:
    arr = np.asarray(weights, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(WEIGHTS_HEADER)
        for name, w in zip(CATEGORY_NAMES, arr):
            writer.writerow([name, repr(float(w))])


def image_id_from_path(path) -> str:
    """Image identifier convention: the file name without its extension."""
    return Path(path).stem


IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def build_manifest(root, source: str = "local") -> Manifest:
    """Scan ``root/<CATEGORY>/*`` into a manifest, sorted by path.

    Each immediate subdirectory named after a category labels the
    images inside it; other directories are ignored. All records start
    with split "none".
    """
    root = Path(root)
    if not root.is_dir():
        raise FormatError(f"{root} is not a directory")
    records = []
    for name in CATEGORY_NAMES:
        cat_dir = root / name
        if not cat_dir.is_dir():
            continue
        for p in sorted(cat_dir.iterdir()):
            if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file():
                records.append(ManifestRecord(str(p), source, Category.from_name(name)))
    manifest = Manifest(tuple(records))
    manifest.check_unique_paths()
    return manifest
