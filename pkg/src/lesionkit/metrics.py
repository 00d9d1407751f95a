"""Challenge-style evaluation: ROC/AUC, partial AUC, average precision,
per-class binary metrics and balanced multiclass accuracy.

Each of the nine categories is scored one-vs-rest; the report carries
the per-category values, their arithmetic mean, and the balanced
multiclass accuracy (mean per-class recall under the argmax rule).

Decision rules: ranking metrics (AUC, partial AUC, average precision)
use the raw confidences; the binary metrics binarize each category at a
fixed confidence threshold (default 0.5); balanced accuracy uses argmax.
Zero-denominator conventions: sensitivity, specificity and Dice fall
back to 0, PPV and NPV to 1 (a vacuous predictor makes no false calls).
"""

import io as _io
import warnings
from dataclasses import dataclass

import numpy as np

from .categories import CATEGORY_NAMES, Category, N_CATEGORIES
from .datamodel import GroundTruthSet, PredictionSet, align
from .validation import check_binary_labels, check_scores, readonly

METRIC_FIELDS = (
    "auc",
    "auc_sens80",
    "avg_precision",
    "accuracy",
    "sensitivity",
    "specificity",
    "dice",
    "ppv",
    "npv",
)

METRIC_LABELS = {
    "auc": "AUC",
    "auc_sens80": "AUC, Sens>80%",
    "avg_precision": "Avg. Precision",
    "accuracy": "Accuracy",
    "sensitivity": "Sensitivity",
    "specificity": "Specificity",
    "dice": "Dice Coeff",
    "ppv": "PPV",
    "npv": "NPV",
}


@dataclass(frozen=True)
class RocCurve:
    """Receiver operating characteristic points, ordered by threshold.

    ``fpr`` and ``tpr`` are non-decreasing from (0, 0) to (1, 1);
    ``thresholds`` is strictly decreasing, starting at +inf for the
    empty-positive-set endpoint. Ties in scores are grouped into a
    single point.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "fpr", readonly(np.asarray(self.fpr, dtype=np.float64)))
        object.__setattr__(self, "tpr", readonly(np.asarray(self.tpr, dtype=np.float64)))
        object.__setattr__(
            self, "thresholds", readonly(np.asarray(self.thresholds, dtype=np.float64))
        )


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def total(self) -> int:
        return int(self.tp + self.fp + self.tn + self.fn)


@dataclass(frozen=True)
class BinaryMetrics:
    accuracy: float
    sensitivity: float
    specificity: float
    dice: float
    ppv: float
    npv: float


@dataclass(frozen=True)
class CategoryMetrics:
    """The nine reported metrics for one category (or the mean column).

    Ranking metrics are ``None`` for categories with no positive (or no
    negative) ground-truth items, where they are undefined.
    """

    auc: float | None
    auc_sens80: float | None
    avg_precision: float | None
    accuracy: float
    sensitivity: float
    specificity: float
    dice: float
    ppv: float
    npv: float


@dataclass(frozen=True)
class MetricsReport:
    per_category: dict
    mean: CategoryMetrics
    balanced_accuracy: float
    flagged_categories: tuple[str, ...] = ()
    priors: np.ndarray | None = None


def roc_curve(scores, labels) -> RocCurve:
    """ROC points from a standard threshold sweep over distinct scores.

    Requires at least one positive and one negative label. Tied scores
    collapse into a single threshold, and the (0, 0) and (1, 1)
    endpoints are always present.
    """
    s = check_scores(scores)
    y = check_binary_labels(labels, n=s.shape[0])
    n_pos = int(y.sum())
    n_neg = int(y.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError(
            f"roc curve needs both classes, got {n_pos} positives / {n_neg} negatives"
        )
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # indices closing each group of tied scores
    idx = np.r_[np.flatnonzero(np.diff(s_sorted)), s.shape[0] - 1]
    tp = np.cumsum(y_sorted)[idx]
    fp = (idx + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, s_sorted[idx]]
    return RocCurve(fpr, tpr, thresholds)


def _trapezoid(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(np.diff(x) * (y[:-1] + y[1:])) / 2.0)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC curve."""
    return _trapezoid(curve.fpr, curve.tpr)


def auc_above_sensitivity(curve: RocCurve, min_tpr: float = 0.8) -> float:
    """Area under the ROC curve restricted to sensitivity above ``min_tpr``.

    Integration runs over false positive rates >= f0, where f0 is the
    linearly interpolated FPR at which the curve first reaches
    ``min_tpr``. Unnormalized, so the value never exceeds the full AUC
    and a perfect classifier still scores 1.0.
    """
    if not 0.0 <= min_tpr <= 1.0:
        raise ValueError(f"min_tpr must be in [0, 1], got {min_tpr}")
    fpr, tpr = curve.fpr, curve.tpr
    k = int(np.argmax(tpr >= min_tpr))
    if k == 0:
        return _trapezoid(fpr, tpr)
    f1, t1, f2, t2 = fpr[k - 1], tpr[k - 1], fpr[k], tpr[k]
    f0 = f1 if t2 == t1 else f1 + (f2 - f1) * (min_tpr - t1) / (t2 - t1)
    xs = np.r_[f0, fpr[k:]]
    ys = np.r_[min_tpr, tpr[k:]]
    return _trapezoid(xs, ys)


def average_precision(scores, labels) -> float:
    """Area under the step-interpolated precision-recall curve.

    Precision at each recall level is the maximum precision attained at
    any recall greater than or equal to it.
    """
    s = check_scores(scores)
    y = check_binary_labels(labels, n=s.shape[0])
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    idx = np.r_[np.flatnonzero(np.diff(s_sorted)), s.shape[0] - 1]
    tp = np.cumsum(y_sorted)[idx]
    precision = tp / (idx + 1)
    recall = tp / n_pos
    interpolated = np.maximum.accumulate(precision[::-1])[::-1]
    recall_steps = np.diff(np.r_[0.0, recall])
    return float(np.sum(recall_steps * interpolated))


def binarize(preds, truth, category, threshold: float = 0.5):
    """Threshold one category's confidences into a binary decision.

    Returns the per-item boolean decision (positive iff confidence is
    at least ``threshold``) and the confusion counts against truth.
    """
    values, labels = _aligned_arrays(preds, truth)
    cat = Category(category) if not isinstance(category, Category) else category
    decided = values[:, int(cat)] >= threshold
    actual = labels == int(cat)
    tp = int(np.sum(decided & actual))
    fp = int(np.sum(decided & ~actual))
    fn = int(np.sum(~decided & actual))
    tn = int(np.sum(~decided & ~actual))
    return decided, ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: float, den: float, on_zero: float) -> float:
    return num / den if den else on_zero


def binary_metrics(c: ConfusionCounts) -> BinaryMetrics:
    """Derive the six binary metrics from confusion counts.

    Accuracy uses the prevalence identity
    ``sensitivity * prevalence + specificity * (1 - prevalence)``,
    which equals (tp + tn) / total.
    """
    sensitivity = _ratio(c.tp, c.tp + c.fn, 0.0)
    specificity = _ratio(c.tn, c.tn + c.fp, 0.0)
    ppv = _ratio(c.tp, c.tp + c.fp, 1.0)
    npv = _ratio(c.tn, c.tn + c.fn, 1.0)
    dice = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, 0.0)
    prevalence = _ratio(c.tp + c.fn, c.total, 0.0)
    accuracy = sensitivity * prevalence + specificity * (1.0 - prevalence)
    return BinaryMetrics(
        accuracy=accuracy,
        sensitivity=sensitivity,
        specificity=specificity,
        dice=dice,
        ppv=ppv,
        npv=npv,
    )


def _aligned_arrays(preds, truth):
    if isinstance(preds, PredictionSet) and isinstance(truth, GroundTruthSet):
        preds, truth = align(preds, truth)
        return np.asarray(preds.values), np.asarray(truth.labels)
    values = np.asarray(preds.values if isinstance(preds, PredictionSet) else preds)
    labels = np.asarray(truth.labels if isinstance(truth, GroundTruthSet) else truth)
    labels = labels.astype(np.int64)
    if values.shape[0] != labels.shape[0]:
        raise ValueError(
            f"{values.shape[0]} prediction rows but {labels.shape[0]} truth labels"
        )
    return values, labels


def balanced_accuracy(preds, truth) -> float:
    """Mean per-class recall under the argmax decision rule.

    Categories absent from the ground truth are excluded from the mean
    (with a warning); ties in a row resolve to the lowest category
    index.
    """
    values, labels = _aligned_arrays(preds, truth)
    if values.shape[0] == 0:
        raise ValueError("balanced accuracy of an empty set is undefined")
    predicted = np.argmax(values, axis=1)
    recalls = []
    absent = []
    for c in range(values.shape[1]):
        mask = labels == c
        if not mask.any():
            absent.append(CATEGORY_NAMES[c] if values.shape[1] == N_CATEGORIES else str(c))
            continue
        recalls.append(float(np.mean(predicted[mask] == c)))
    if absent:
        warnings.warn(
            f"balanced accuracy averaged over present categories only; absent: {absent}",
            stacklevel=2,
        )
    return float(np.mean(recalls))


def category_mean(values) -> float:
    """Arithmetic mean over category values, skipping undefined (None) ones."""
    present = [v for v in values if v is not None]
    if not present:
        raise ValueError("no defined category values to average")
    return float(sum(present) / len(present))


def full_report(preds, truth, counts=None, threshold: float = 0.5) -> MetricsReport:
    """Score predictions against truth for all nine categories.

    Produces per-category metrics, their mean column and the balanced
    multiclass accuracy. ``counts`` (training class counts) is optional
    prior context recorded with the report. Categories missing a
    positive or negative item in truth get None for the ranking metrics
    and are flagged.
    """
    if isinstance(preds, PredictionSet) and isinstance(truth, GroundTruthSet):
        preds, truth = align(preds, truth)
    values, labels = _aligned_arrays(preds, truth)
    if values.shape[1] != N_CATEGORIES:
        raise ValueError(f"full report requires {N_CATEGORIES} confidence columns")
    if values.shape[0] == 0:
        raise ValueError("cannot score an empty prediction set")

    per_category: dict[str, CategoryMetrics] = {}
    flagged: list[str] = []
    for c in range(N_CATEGORIES):
        name = CATEGORY_NAMES[c]
        scores = values[:, c]
        binary = (labels == c).astype(np.int64)
        n_pos = int(binary.sum())
        n_neg = int(binary.shape[0] - n_pos)
        auc_value = auc_sens80_value = ap_value = None
        if n_pos and n_neg:
            curve = roc_curve(scores, binary)
            auc_value = auc(curve)
            auc_sens80_value = auc_above_sensitivity(curve)
            ap_value = average_precision(scores, binary)
        elif n_pos:
            ap_value = average_precision(scores, binary)
            flagged.append(name)
        else:
            flagged.append(name)
        _, confusion = binarize(values, labels, Category(c), threshold=threshold)
        b = binary_metrics(confusion)
        per_category[name] = CategoryMetrics(
            auc=auc_value,
            auc_sens80=auc_sens80_value,
            avg_precision=ap_value,
            accuracy=b.accuracy,
            sensitivity=b.sensitivity,
            specificity=b.specificity,
            dice=b.dice,
            ppv=b.ppv,
            npv=b.npv,
        )

    mean = CategoryMetrics(
        **{
            field: category_mean([getattr(per_category[n], field) for n in CATEGORY_NAMES])
            for field in METRIC_FIELDS
        }
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bal_acc = balanced_accuracy(values, labels)
    priors = None
    if counts is not None:
        priors = counts.priors if hasattr(counts, "priors") else np.asarray(counts, dtype=np.float64)
    return MetricsReport(
        per_category=per_category,
        mean=mean,
        balanced_accuracy=bal_acc,
        flagged_categories=tuple(flagged),
        priors=priors,
    )


def format_report_keyvalues(report: MetricsReport) -> str:
    """Machine-readable ``key = value`` serialization of a report."""
    lines = [f"balanced_accuracy = {report.balanced_accuracy!r}"]
    for field in METRIC_FIELDS:
        lines.append(f"{field}.mean = {getattr(report.mean, field)!r}")
        for name in CATEGORY_NAMES:
            value = getattr(report.per_category[name], field)
            lines.append(f"{field}.{name} = {'nan' if value is None else repr(value)}")
    if report.flagged_categories:
        lines.append(f"flagged_categories = {','.join(report.flagged_categories)}")
    if report.priors is not None:
        for name, p in zip(CATEGORY_NAMES, report.priors):
            lines.append(f"prior.{name} = {float(p)!r}")
    return "\n".join(lines) + "\n"


def format_report_table(report: MetricsReport) -> str:
    """Aligned text table: one row per metric, columns mean + categories."""
    headers = ["Metric", "Mean"] + list(CATEGORY_NAMES)
    rows = []
    for field in METRIC_FIELDS:
        cells = [METRIC_LABELS[field], _cell(getattr(report.mean, field))]
        cells += [_cell(getattr(report.per_category[n], field)) for n in CATEGORY_NAMES]
        rows.append(cells)
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in rows:
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    out.append("")
    out.append(f"Balanced multiclass accuracy: {report.balanced_accuracy:.3f}")
    if report.flagged_categories:
        out.append(
            "Flagged (ranking metrics undefined): " + ", ".join(report.flagged_categories)
        )
    return "\n".join(out) + "\n"


def _cell(value) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def roc_points_csv(curve: RocCurve) -> str:
    """Curve points as ``fpr,tpr,threshold`` CSV text."""
    lines = ["fpr,tpr,threshold"]
    for f, t, thr in zip(curve.fpr, curve.tpr, curve.thresholds):
        lines.append(f"{float(f)!r},{float(t)!r},{float(thr)!r}")
    return "\n".join(lines) + "\n"


def render_roc_svg(curve: RocCurve, label: str | None = None) -> bytes:
    """Render an FPR-vs-TPR plot as deterministic SVG bytes."""
    import matplotlib

    # deferred import: scoring should not pay matplotlib startup cost
    with matplotlib.rc_context({"svg.hashsalt": "lesionkit"}):
        from matplotlib.figure import Figure

        fig = Figure(figsize=(4.0, 4.0), dpi=100)
        ax = fig.add_subplot(111)
        ax.plot([0.0, 1.0], [0.0, 1.0], linestyle="--", color="0.6", linewidth=0.8)
        ax.plot(curve.fpr, curve.tpr, color="#1f6fb4", linewidth=1.5, label=label)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(0.0, 1.0)
        if label:
            ax.legend(loc="lower right")
        buf = _io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        return buf.getvalue()
