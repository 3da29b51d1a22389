"""Evaluation metrics, aggregation, annotation fusion, and the
rank-sum significance test.

Metric conventions: class 1 is positive. Any ratio with a zero
denominator is reported as None (the undefined marker) instead of
raising or propagating NaN. Micro aggregation pools confusion counts;
macro aggregation averages per-image metrics with the sample (n-1)
standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .cube_io import LabelMap, UNLABELED
from .errors import ValidationError

METRIC_NAMES = ("se", "sp", "bacc", "f1", "iou", "prec")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            v = getattr(self, name)
            if v < 0 or v != int(v):
                raise ValidationError("%s must be a nonnegative count" % name)
            object.__setattr__(self, name, int(v))

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.tn + other.tn,
            self.fp + other.fp, self.fn + other.fn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsReport:
    se: float | None
    sp: float | None
    bacc: float | None
    f1: float | None
    iou: float | None
    prec: float | None

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def confusion(pred: LabelMap, gt: LabelMap, mask) -> ConfusionCounts:
    """Count TP/TN/FP/FN over the masked pixels (class 1 positive)."""
    if (pred.rows, pred.cols) != (gt.rows, gt.cols):
        raise ValidationError("prediction and ground truth dims differ")
    m = np.asarray(mask, dtype=bool)
    if m.shape != (gt.rows, gt.cols):
        raise ValidationError("mask dims differ from the maps")
    if not np.any(m):
        raise ValidationError("evaluation mask is empty")
    g = gt.labels[m]
    p = pred.labels[m]
    if np.any(g == UNLABELED):
        raise ValidationError("mask covers unlabeled ground-truth pixels")
    if np.any(p == UNLABELED):
        raise ValidationError("mask covers unlabeled predicted pixels")
    tp = int(np.sum((p == 1) & (g == 1)))
    tn = int(np.sum((p == 0) & (g == 0)))
    fp = int(np.sum((p == 1) & (g == 0)))
    fn = int(np.sum((p == 0) & (g == 1)))
    return ConfusionCounts(tp, tn, fp, fn)


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def metrics(c: ConfusionCounts) -> MetricsReport:
    """Sensitivity, specificity, balanced accuracy, F1, IoU, precision."""
    if c.total == 0:
        raise ValidationError("confusion counts are all zero")
    se = _ratio(c.tp, c.tp + c.fn)
    sp = _ratio(c.tn, c.tn + c.fp)
    bacc = None if se is None or sp is None else (se + sp) / 2.0
    f1 = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)
    iou = _ratio(c.tp, c.tp + c.fn + c.fp)
    prec = _ratio(c.tp, c.tp + c.fp)
    return MetricsReport(se, sp, bacc, f1, iou, prec)


def micro_aggregate(counts) -> MetricsReport:
    """Pool confusion counts element-wise, then compute metrics."""
    counts = list(counts)
    if not counts:
        raise ValidationError("micro aggregation needs at least one element")
    total = ConfusionCounts()
    for c in counts:
        total = total + c
    return metrics(total)


def macro_aggregate(reports) -> dict:
    """Per-metric (mean, sample std, count) over a list of reports.

    Undefined entries are skipped per metric; a single defined value
    reports std 0; no defined values report (None, None, 0).
    """
    reports = list(reports)
    if not reports:
        raise ValidationError("macro aggregation needs at least one report")
    out = {}
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if not vals:
            out[name] = (None, None, 0)
        elif len(vals) == 1:
            out[name] = (float(vals[0]), 0.0, 1)
        else:
            arr = np.array(vals, dtype=np.float64)
            out[name] = (float(arr.mean()), float(arr.std(ddof=1)), len(vals))
    return out


def majority_vote(maps) -> LabelMap:
    """Per-pixel modal label over an odd number of fully labeled maps."""
    maps = list(maps)
    if len(maps) < 3 or len(maps) % 2 == 0:
        raise ValidationError("majority vote needs an odd count >= 3")
    rows, cols = maps[0].rows, maps[0].cols
    stack = []
    for m in maps:
        if (m.rows, m.cols) != (rows, cols):
            raise ValidationError("label map dimensions differ")
        if np.any(m.labels == UNLABELED):
            raise ValidationError("majority vote requires fully labeled maps")
        stack.append(m.labels.astype(np.int64))
    votes = np.sum(stack, axis=0)
    out = (2 * votes > len(maps)).astype(np.uint8)
    return LabelMap(rows, cols, out)


def fleiss_kappa(ratings) -> float:
    """Fleiss' kappa for an (items x raters) categorical table.

    Unanimous tables return 1.0, including the single-category case
    where the chance-agreement denominator degenerates.
    """
    table = np.asarray(ratings)
    if table.ndim != 2:
        raise ValidationError("ratings must be a 2-D items x raters table")
    n, m = table.shape
    if n < 1 or m < 2:
        raise ValidationError("need at least 1 item and 2 raters")
    cats = np.unique(table)
    counts = np.stack([(table == c).sum(axis=1) for c in cats], axis=1)
    p_i = (np.sum(counts * counts, axis=1) - m) / (m * (m - 1))
    p_bar = float(p_i.mean())
    p_j = counts.sum(axis=0) / (n * m)
    p_e = float(np.sum(p_j * p_j))
    if 1.0 - p_e < 1e-15:
        return 1.0
    return (p_bar - p_e) / (1.0 - p_e)


_BANDS = (
    (0.20, "slight"),
    (0.40, "fair"),
    (0.60, "moderate"),
    (0.80, "substantial"),
    (1.00, "almost perfect"),
)


def kappa_band(kappa: float) -> str:
    """Six-band agreement label; each band is closed at its upper end."""
    if kappa > 1.0 + 1e-12:
        raise ValidationError("kappa cannot exceed 1")
    if kappa < 0.0:
        return "poor"
    for upper, name in _BANDS:
        if kappa <= upper:
            return name
    return "almost perfect"


# ---------------------------------------------------------------------------
# Wilcoxon rank-sum


def _exact_tail_counts(n: int, m: int):
    """Distribution of the rank sum of n items among ranks 1..n+m.

    Returns an array c where c[s] counts the n-subsets of {1..n+m}
    with rank sum s (the full enumeration, computed by dynamic
    programming over ranks).
    """
    total = n + m
    smax = sum(range(total - n + 1, total + 1))
    table = np.zeros((n + 1, smax + 1), dtype=np.float64)
    table[0, 0] = 1.0
    for rank in range(1, total + 1):
        upper = min(n, rank)
        for j in range(upper, 0, -1):
            table[j, rank:] += table[j - 1, : smax + 1 - rank]
    return table[n]


def wilcoxon_ranksum(a, b, method: str = "auto"):
    """Two-sided rank-sum test; returns (rank sum of a, p-value).

    Midranks handle ties. The exact p comes from full enumeration of
    rank assignments (dynamic programming, tie-free samples only) and
    is used automatically when min(n, m) <= 8 and no ties are present;
    otherwise the normal approximation with tie-corrected variance and
    continuity correction applies. method forces 'exact' or 'normal'.
    """
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise ValidationError("both samples must be nonempty")
    if method not in ("auto", "exact", "normal"):
        raise ValidationError("method must be auto, exact, or normal")
    n, m = x.size, y.size
    pooled = np.concatenate((x, y))
    ranks = rankdata(pooled, method="average")
    w = float(ranks[:n].sum())
    _, tie_counts = np.unique(pooled, return_counts=True)
    has_ties = bool(np.any(tie_counts > 1))

    use_exact = method == "exact" or (
        method == "auto" and not has_ties and min(n, m) <= 8
    )
    if use_exact:
        if has_ties:
            raise ValidationError("exact enumeration requires tie-free samples")
        counts = _exact_tail_counts(n, m)
        totalc = counts.sum()
        wi = int(round(w))
        lo = counts[: wi + 1].sum() / totalc
        hi = counts[wi:].sum() / totalc
        p = min(1.0, 2.0 * min(lo, hi))
        return w, float(p)

    total = n + m
    mu = n * (total + 1) / 2.0
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    var = (n * m / 12.0) * ((total + 1) - tie_term / (total * (total - 1)))
    if var <= 0 or w == mu:
        return w, 1.0
    z = (w - mu - 0.5 * np.sign(w - mu)) / math.sqrt(var)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
    return w, float(max(p, 5e-324))
