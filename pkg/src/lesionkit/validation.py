"""Input validation helpers shared across the package.

The helpers follow the scikit-learn convention: validate, coerce to a
canonical dtype, and raise ``ValueError`` subclasses with actionable
messages. All returned arrays are C-contiguous ``float64`` (or ``uint8``
for images) so downstream numerics behave identically regardless of the
caller's dtype.
"""

from collections.abc import Sequence

import numpy as np

from .exceptions import FormatError


def check_confidence_matrix(values, n_columns: int | None = None) -> np.ndarray:
    """Validate a (rows, classes) matrix of non-negative finite confidences."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError(f"confidence matrix must be 2-dimensional, got shape {arr.shape}")
    if n_columns is not None and arr.shape[1] != n_columns:
        raise FormatError(
            f"confidence matrix must have {n_columns} columns, got {arr.shape[1]}"
        )
    if not np.all(np.isfinite(arr)):
        raise FormatError("confidence matrix contains non-finite entries")
    if np.any(arr < 0):
        raise FormatError("confidence matrix contains negative entries")
    return arr


def check_unique_ids(ids: Sequence[str], what: str = "image id") -> tuple[str, ...]:
    """Validate that ids are non-empty strings without duplicates."""
    out = tuple(ids)
    seen: set[str] = set()
    for i in out:
        if not isinstance(i, str) or not i:
            raise FormatError(f"{what} must be a non-empty string, got {i!r}")
        if i in seen:
            raise FormatError(f"duplicate {what} {i!r}")
        seen.add(i)
    return out


def check_scores(scores) -> np.ndarray:
    arr = np.ascontiguousarray(scores, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"scores must be 1-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores contain non-finite values")
    return arr


def check_binary_labels(labels, n: int | None = None) -> np.ndarray:
    arr = np.ascontiguousarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} labels, got {arr.shape[0]}")
    uniq = np.unique(arr)
    if not np.all(np.isin(uniq, (0, 1))):
        raise ValueError(f"labels must be 0/1, got values {uniq}")
    return arr.astype(np.int64)


def check_image(img) -> np.ndarray:
    """Validate an 8-bit RGB image of shape (height, width, 3)."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise ValueError(f"image must be uint8, got dtype {arr.dtype}")
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"image must have shape (height, width, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got {arr.shape[:2]}")
    return arr


def readonly(arr: np.ndarray) -> np.ndarray:
    """Return an array flagged read-only (shared-structure safe)."""
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out
