"""Prediction combination: test-time-augmentation merging and ensembling.

Every function accepts either :class:`~lesionkit.datamodel.PredictionSet`
instances or plain 2-d arrays and returns the matching kind. Reductions
over several sets use sorted accumulation per cell, so results are
exactly invariant to the order in which members are supplied.
"""

import numpy as np

from .datamodel import PredictionSet
from .exceptions import AlignmentError


def softmax(logits, axis: int = -1) -> np.ndarray:
    """Overflow-safe exponential normalization along ``axis``.

    The maximum is subtracted before exponentiation, so arbitrarily
    large finite logits are handled without overflow and adding a
    constant to all logits leaves the output unchanged.
    """
    x = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("softmax requires finite logits")
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _as_matrix(p) -> np.ndarray:
    return np.asarray(p.values if isinstance(p, PredictionSet) else p, dtype=np.float64)


def _aligned_matrices(reference: PredictionSet, others):
    """Matrices of ``others`` reordered to the reference id order."""
    ref_ids = set(reference.image_ids)
    mats = []
    for other in others:
        if set(other.image_ids) != ref_ids:
            missing = sorted(ref_ids - set(other.image_ids))
            extra = sorted(set(other.image_ids) - ref_ids)
            raise AlignmentError(
                f"prediction sets cover different ids: missing {missing}, unexpected {extra}",
                missing_from_predictions=missing,
                missing_from_truth=extra,
            )
        mats.append(np.asarray(other.reordered(reference.image_ids).values))
    return mats


def _sorted_mean(matrices: list[np.ndarray]) -> np.ndarray:
    # Sorting each cell across members before summing makes the result
    # independent of member order, not just within rounding error.
    stack = np.stack(matrices, axis=0)
    return np.sort(stack, axis=0).sum(axis=0) / len(matrices)


def tta_merge(regular, augmented, beta: float = 0.4):
    """Blend regular predictions with the mean of augmented-view predictions.

    The output is ``beta * regular + (1 - beta) * mean(augmented)``,
    elementwise, the weighting used when predictions on the augmented
    copies of each test image are folded back into the plain prediction.

    Parameters
    ----------
    regular : PredictionSet or array
        Predictions on the untransformed inputs.
    augmented : sequence of PredictionSet or array
        One prediction set per augmented variant (typically 8).
    beta : float in [0, 1]
        Weight of the regular predictions.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if len(augmented) == 0:
        raise ValueError("augmented prediction list is empty")
    if isinstance(regular, PredictionSet):
        mats = _aligned_matrices(regular, augmented)
        merged = beta * np.asarray(regular.values) + (1.0 - beta) * _sorted_mean(mats)
        return regular.with_values(merged)
    reg = _as_matrix(regular)
    mats = [_as_matrix(a) for a in augmented]
    if any(m.shape != reg.shape for m in mats):
        raise ValueError("augmented matrices must match the regular matrix shape")
    return beta * reg + (1.0 - beta) * _sorted_mean(mats)


def ensemble_mean(members, weights=None):
    """Arithmetic mean of several aligned prediction sets.

    With ``weights`` given, a convex weighted average is used instead of
    the plain mean (the default pipeline never sets weights).
    """
    members = list(members)
    if not members:
        raise ValueError("ensemble requires at least one member")
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(members),):
            raise ValueError(f"expected {len(members)} weights, got shape {w.shape}")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be non-negative with positive sum")
        w = w / w.sum()

    if isinstance(members[0], PredictionSet):
        first = members[0]
        mats = [np.asarray(first.values)] + _aligned_matrices(first, members[1:])
    else:
        mats = [_as_matrix(m) for m in members]
        if any(m.shape != mats[0].shape for m in mats):
            raise ValueError("ensemble members must share one shape")

    if weights is None:
        return _rewrap(members[0], _sorted_mean(mats))
    combined = sum(wi * m for wi, m in zip(w, mats))
    return _rewrap(members[0], combined)


def _rewrap(template, matrix: np.ndarray):
    if isinstance(template, PredictionSet):
        return template.with_values(matrix)
    return matrix
