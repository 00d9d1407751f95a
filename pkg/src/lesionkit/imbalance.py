"""Class-imbalance handling.

Covers the four imbalance strategies of the study: effective-number
class weights, weighted cross-entropy, rescaling outputs by the inverse
a-priori class probability, and random oversampling, plus the 90/10
stratified split that precedes them.

Weight vectors are normalized to sum to the number of classes, so a
uniform vector is all ones and weighted losses stay on the same scale
as unweighted ones.
"""

from fractions import Fraction

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .categories import CATEGORY_NAMES
from .datamodel import ClassCounts, Manifest, ManifestRecord, PredictionSet, normalize_rows
from .validation import check_confidence_matrix


def _counts_array(counts) -> np.ndarray:
    """Accept ClassCounts or any 1-d count vector (reduced class sets included)."""
    if isinstance(counts, ClassCounts):
        return np.asarray(counts.counts, dtype=np.int64)
    arr = np.ascontiguousarray(counts, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"counts must be a non-empty 1-d vector, got shape {arr.shape}")
    if np.any(arr < 0):
        raise ValueError("counts must be non-negative")
    return arr


def _class_name(index: int, n_classes: int) -> str:
    if n_classes == len(CATEGORY_NAMES):
        return CATEGORY_NAMES[index]
    return f"class {index}"


def _require_positive_counts(n: np.ndarray) -> None:
    zero = np.flatnonzero(n == 0)
    if zero.size:
        names = ", ".join(_class_name(int(i), n.size) for i in zero)
        raise ValueError(f"weights undefined for classes with zero samples: {names}")


def effective_weights(counts, beta: float = 0.999) -> np.ndarray:
    """Class weights from the effective number of samples.

    Each class with ``n`` samples has effective number
    ``(1 - beta**n) / (1 - beta)``; its weight is the reciprocal,
    normalized so the weights sum to the class count. ``beta = 0``
    applies no weighting (all ones) and the ``beta -> 1`` limit
    recovers inverse class-frequency weighting.
    """
    n = _counts_array(counts)
    _require_positive_counts(n)
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    effective = (1.0 - np.power(beta, n.astype(np.float64))) / (1.0 - beta)
    raw = 1.0 / effective
    return raw * (n.size / raw.sum())


def inverse_frequency_weights(counts) -> np.ndarray:
    """Weights proportional to 1/n per class, normalized to sum to the class count."""
    n = _counts_array(counts)
    _require_positive_counts(n)
    raw = 1.0 / n.astype(np.float64)
    return raw * (n.size / raw.sum())


def weighted_cross_entropy(logits, targets, weights=None) -> float:
    """Mean weighted cross-entropy of a batch of logit rows.

    The per-item loss is ``W[y] * (-x[y] + log(sum_j exp(x[j])))``,
    evaluated with a max-subtracted logsumexp; the batch loss is the
    arithmetic mean. ``weights=None`` means unit weights.
    """
    x = np.ascontiguousarray(logits, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"logits must be a (batch, classes) matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("logits contain non-finite values")
    y = np.ascontiguousarray(targets, dtype=np.int64)
    if y.ndim == 0:
        y = y[None]
    if y.shape != (x.shape[0],):
        raise ValueError(f"expected {x.shape[0]} targets, got shape {y.shape}")
    if y.size and (y.min() < 0 or y.max() >= x.shape[1]):
        raise ValueError("targets outside the class range")
    if weights is None:
        w = np.ones(x.shape[1])
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.shape != (x.shape[1],):
            raise ValueError(f"expected {x.shape[1]} weights, got shape {w.shape}")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and strictly positive")
    rows = np.arange(x.shape[0])
    per_item = w[y] * (-x[rows, y] + logsumexp(x, axis=1))
    return float(per_item.mean())


def prior_rescale(preds, counts):
    """Divide confidences by the estimated a-priori class probability.

    Priors are ``p(c) = n_c / sum_k n_k``. Each confidence column is
    divided by its prior and rows are then renormalized to sum to one,
    which corrects the prevalence bias a classifier picks up from an
    imbalanced training set. A class may have a zero prior only if no
    row assigns it any confidence.
    """
    if isinstance(preds, PredictionSet):
        return preds.with_values(prior_rescale(np.asarray(preds.values), counts))
    values = check_confidence_matrix(preds)
    n = _counts_array(counts)
    if n.size != values.shape[1]:
        raise ValueError(f"{values.shape[1]} confidence columns but {n.size} class counts")
    total = n.sum()
    if total == 0:
        raise ValueError("all class counts are zero, priors undefined")
    priors = n / total
    zero = np.flatnonzero(priors == 0)
    bad = [int(c) for c in zero if np.any(values[:, c] > 0)]
    if bad:
        names = ", ".join(_class_name(c, n.size) for c in bad)
        raise ValueError(f"zero prior for classes with nonzero confidence: {names}")
    rescaled = values.copy()
    nonzero = priors > 0
    rescaled[:, nonzero] = rescaled[:, nonzero] / priors[nonzero]
    return normalize_rows(rescaled)


class PriorRescaler(BaseEstimator, TransformerMixin):
    """Transformer form of :func:`prior_rescale` for pipeline composition.

    Fit learns the per-class priors, either from integer labels passed
    as ``y`` or from the ``counts`` constructor parameter; transform
    rescales a confidence matrix by those priors and renormalizes rows.

    Examples
    --------
    >>> import numpy as np
    >>> rescaler = PriorRescaler().fit(None, y=np.array([0, 0, 0, 1]))
    >>> rescaler.transform(np.array([[0.5, 0.5]]))
    array([[0.25, 0.75]])
    """

    def __init__(self, counts=None):
        self.counts = counts

    def fit(self, X, y=None):
        if self.counts is not None:
            self.counts_ = _counts_array(self.counts)
        elif y is not None:
            labels = np.asarray(y, dtype=np.int64)
            minlength = 0 if X is None else np.asarray(X).shape[1]
            self.counts_ = np.bincount(labels, minlength=minlength)
        else:
            raise ValueError("provide counts at construction or labels via y")
        if self.counts_.sum() == 0:
            raise ValueError("all class counts are zero, priors undefined")
        self.priors_ = self.counts_ / self.counts_.sum()
        return self

    def transform(self, X):
        if not hasattr(self, "counts_"):
            raise NotFittedError("PriorRescaler must be fitted before transform")
        return prior_rescale(X, self.counts_)


def _exact_fraction(x) -> Fraction:
    # Floats are read through their shortest decimal literal, so 0.1
    # means exactly one tenth when computing per-class counts.
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(str(float(x)))


def _round_half_up(x: Fraction) -> int:
    return int(x + Fraction(1, 2))


def split_manifest(manifest: Manifest, valid_fraction=0.10, seed: int = 0) -> Manifest:
    """Assign every record a train/valid split, stratified per class.

    Each class contributes ``round(valid_fraction * n_c)`` records
    (half rounds up, computed in exact arithmetic) to the validation
    split, chosen uniformly at random; the rest go to training. Record
    order is preserved and the assignment is a deterministic function
    of the seed.
    """
    fraction = _exact_fraction(valid_fraction)
    if not 0 < fraction < 1:
        raise ValueError(f"valid_fraction must be in (0, 1), got {valid_fraction}")
    rng = np.random.Generator(np.random.PCG64(seed))
    by_class: dict[int, list[int]] = {}
    for idx, record in enumerate(manifest):
        by_class.setdefault(int(record.label), []).append(idx)
    valid_indices: set[int] = set()
    for label in sorted(by_class):
        indices = by_class[label]
        n_valid = _round_half_up(fraction * len(indices))
        chosen = rng.permutation(len(indices))[:n_valid]
        valid_indices.update(indices[int(i)] for i in chosen)
    records = tuple(
        ManifestRecord(r.path, r.source, r.label, "valid" if i in valid_indices else "train")
        for i, r in enumerate(manifest)
    )
    return Manifest(records)


def oversample_manifest(manifest: Manifest, seed: int = 0, split: str = "train") -> Manifest:
    """Balance class frequencies by duplicating minority-class records.

    Records of the given split are supplemented with copies drawn
    uniformly at random (with replacement) until every class present
    reaches the majority class count. Original records are all retained
    in their original order; copies are appended per class in canonical
    category order. Deterministic under the seed.
    """
    by_class: dict[int, list[ManifestRecord]] = {}
    for record in manifest:
        if record.split == split:
            by_class.setdefault(int(record.label), []).append(record)
    if not by_class:
        raise ValueError(f"manifest has no records with split {split!r}")
    majority = max(len(v) for v in by_class.values())
    rng = np.random.Generator(np.random.PCG64(seed))
    additions: list[ManifestRecord] = []
    for label in sorted(by_class):
        pool = by_class[label]
        deficit = majority - len(pool)
        if deficit == 0:
            continue
        draws = rng.integers(0, len(pool), size=deficit)
        additions.extend(pool[int(d)] for d in draws)
    return Manifest(tuple(manifest.records) + tuple(additions))
