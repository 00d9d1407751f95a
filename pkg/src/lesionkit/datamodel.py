"""Core value types shared by every stage of the pipeline.

All containers are immutable after construction (arrays are flagged
read-only), so they can be shared freely across threads.
"""

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .categories import CATEGORY_NAMES, Category, N_CATEGORIES
from .exceptions import AlignmentError, FormatError
from .validation import check_confidence_matrix, check_unique_ids, readonly

SPLITS = ("train", "valid", "none")


@dataclass(frozen=True)
class PredictionSet:
    """Per-image class-confidence matrix keyed by image identifier.

    ``values`` has one row per entry of ``image_ids`` and one column per
    :class:`~lesionkit.categories.Category`, in canonical order. Entries
    are non-negative and finite; rows are *not* required to sum to one
    unless :func:`normalize_rows` has been applied.
    """

    image_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ids = check_unique_ids(self.image_ids)
        vals = check_confidence_matrix(self.values, n_columns=N_CATEGORIES)
        if vals.shape[0] != len(ids):
            raise FormatError(
                f"{len(ids)} image ids but {vals.shape[0]} confidence rows"
            )
        object.__setattr__(self, "image_ids", ids)
        object.__setattr__(self, "values", readonly(vals))

    def __len__(self) -> int:
        return len(self.image_ids)

    def with_values(self, values: np.ndarray) -> "PredictionSet":
        """Same ids, new confidence matrix."""
        return PredictionSet(self.image_ids, values)

    def reordered(self, image_ids: Iterable[str]) -> "PredictionSet":
        """Rows permuted into the given id order. Ids must match exactly."""
        ids = tuple(image_ids)
        index = {i: k for k, i in enumerate(self.image_ids)}
        missing = [i for i in ids if i not in index]
        if missing or len(ids) != len(self.image_ids):
            extra = sorted(set(self.image_ids) - set(ids))
            raise AlignmentError(
                f"cannot reorder: ids missing from set: {missing}; unexpected: {extra}",
                missing_from_predictions=missing,
                missing_from_truth=extra,
            )
        rows = np.array([index[i] for i in ids], dtype=np.intp)
        return PredictionSet(ids, self.values[rows])


@dataclass(frozen=True)
class GroundTruthSet:
    """One true :class:`Category` per image id."""

    image_ids: tuple[str, ...]
    labels: np.ndarray  # category indices, shape (n,)

    def __post_init__(self):
        ids = check_unique_ids(self.image_ids)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] != len(ids):
            raise FormatError(
                f"{len(ids)} image ids but labels have shape {labels.shape}"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= N_CATEGORIES):
            raise FormatError("labels contain values outside the 9 categories")
        object.__setattr__(self, "image_ids", ids)
        object.__setattr__(self, "labels", readonly(labels))

    def __len__(self) -> int:
        return len(self.image_ids)

    def categories(self) -> list[Category]:
        return [Category(int(v)) for v in self.labels]


@dataclass(frozen=True)
class ClassCounts:
    """Per-class sample counts and the priors they induce."""

    counts: np.ndarray  # shape (9,), non-negative integers

    def __post_init__(self):
        arr = np.ascontiguousarray(self.counts, dtype=np.int64)
        if arr.shape != (N_CATEGORIES,):
            raise FormatError(f"counts must have shape ({N_CATEGORIES},), got {arr.shape}")
        if np.any(arr < 0):
            raise FormatError("counts must be non-negative")
        object.__setattr__(self, "counts", readonly(arr))

    @classmethod
    def from_labels(cls, labels) -> "ClassCounts":
        arr = np.asarray(labels, dtype=np.int64)
        return cls(np.bincount(arr, minlength=N_CATEGORIES))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def priors(self) -> np.ndarray:
        """p(c) = |c| / sum_k |k|; all zeros when no samples were counted."""
        total = self.counts.sum()
        if total == 0:
            return np.zeros(N_CATEGORIES)
        return self.counts / total


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    source: str
    label: Category
    split: str = "none"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise FormatError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not isinstance(self.label, Category):
            label = (
                Category.from_name(self.label)
                if isinstance(self.label, str)
                else Category(self.label)
            )
            object.__setattr__(self, "label", label)


@dataclass(frozen=True)
class Manifest:
    """Ordered dataset records driving preprocessing, splitting and oversampling."""

    records: tuple[ManifestRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def with_split(self, split: str) -> "Manifest":
        return Manifest(tuple(r for r in self.records if r.split == split))

    def class_counts(self, split: str | None = None) -> ClassCounts:
        counts = np.zeros(N_CATEGORIES, dtype=np.int64)
        for r in self.records:
            if split is None or r.split == split:
                counts[int(r.label)] += 1
        return ClassCounts(counts)

    def check_unique_paths(self) -> None:
        seen: set[str] = set()
        for r in self.records:
            if r.path in seen:
                raise FormatError(f"duplicate manifest path {r.path!r}")
            seen.add(r.path)


def normalize_rows(preds):
    """Divide each confidence row by its sum so rows sum to one.

    Accepts either a :class:`PredictionSet` or a plain 2-d array and
    returns the same kind. Argmax of every row is unchanged. Raises on
    any all-zero row, which has no defined normalization.
    """
    if isinstance(preds, PredictionSet):
        return preds.with_values(normalize_rows(np.asarray(preds.values)))
    values = check_confidence_matrix(preds)
    sums = values.sum(axis=1)
    zero = np.flatnonzero(sums <= 0)
    if zero.size:
        raise FormatError(f"cannot normalize all-zero rows at indices {zero.tolist()}")
    return values / sums[:, None]


def align(preds: PredictionSet, truth: GroundTruthSet) -> tuple[PredictionSet, GroundTruthSet]:
    """Reorder predictions into ground-truth id order.

    The two id sets must be identical; any ids present on only one side
    are reported exhaustively.
    """
    pred_ids = set(preds.image_ids)
    truth_ids = set(truth.image_ids)
    missing_from_preds = sorted(truth_ids - pred_ids)
    missing_from_truth = sorted(pred_ids - truth_ids)
    if missing_from_preds or missing_from_truth:
        raise AlignmentError(
            "prediction/ground-truth id mismatch: "
            f"missing from predictions: {missing_from_preds}; "
            f"missing from ground truth: {missing_from_truth}",
            missing_from_predictions=missing_from_preds,
            missing_from_truth=missing_from_truth,
        )
    return preds.reordered(truth.image_ids), truth


__all__ = [
    "PredictionSet",
    "GroundTruthSet",
    "ClassCounts",
    "Manifest",
    "ManifestRecord",
    "SPLITS",
    "normalize_rows",
    "align",
]
