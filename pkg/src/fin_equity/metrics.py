"""Fairness-aware metric engine for scored binary predictions.

All metrics live in fractional units (0.5 means 50%, never the number 50).
The equity-scaled family deflates an overall metric by the total absolute
discrepancy between per-group values and the overall value:

    delta = sum_A |overall - group_A|
    es    = overall / (1 + delta)

so es == overall exactly when every group matches the overall value, and
es < overall otherwise. Undefined metrics (single-class AUC, empty groups,
rate gaps with fewer than two eligible groups) are flagged, never imputed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import AttributeSet, GroupPartition, PredictionRecord, partition_by_attribute
from .errors import UndefinedMetricError, ValidationError


def decide(scores, threshold: float = 0.5) -> np.ndarray:
    """Binarize scores: decision 1 iff score >= threshold.

    The boundary is inclusive, so threshold 0.0 selects everything.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(threshold) or not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must lie in [0, 1], got {threshold!r}")
    if scores.size and (
        not np.all(np.isfinite(scores)) or scores.min() < 0.0 or scores.max() > 1.0
    ):
        raise ValidationError("scores must lie in [0, 1]")
    return (scores >= threshold).astype(np.int64)


def _check_paired(a, b, name_a: str, name_b: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(
            f"{name_a} and {name_b} must be 1-D with equal length, "
            f"got {a.shape} vs {b.shape}"
        )
    return a, b


def accuracy(decisions, labels) -> float:
    """Fraction of decisions equal to labels."""
    decisions, labels = _check_paired(decisions, labels, "decisions", "labels")
    if decisions.size == 0:
        raise UndefinedMetricError("accuracy undefined on empty input")
    return float(np.mean(decisions == labels))


def _midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values assigned the mean of their ranks."""
    order = np.argsort(x, kind="stable")
    sx = x[order]
    edges = np.flatnonzero(np.r_[True, sx[1:] != sx[:-1], True])
    mid = 0.5 * (edges[:-1] + edges[1:] + 1)  # mean of 1-based ranks in each run
    ranks = np.empty(x.size, dtype=np.float64)
    ranks[order] = np.repeat(mid, np.diff(edges))
    return ranks


def auc(scores, labels) -> float:
    """Area under the ROC curve via the rank statistic.

    Equals the probability that a uniformly drawn positive outscores a
    uniformly drawn negative, ties counted 1/2. Midranks make the rank form
    identical to counting all positive/negative pairs: both reduce to
    (wins + ties/2) / (P * N) with the same floating-point value, because
    rank sums are exact sums of half-integers.
    """
    scores, labels = _check_paired(scores, labels, "scores", "labels")
    scores = scores.astype(np.float64)
    pos = labels == 1
    n_pos = int(np.count_nonzero(pos))
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"auc undefined: needs both classes, got {n_pos} positive / {n_neg} negative"
        )
    rank_sum = float(np.sum(_midranks(scores)[pos]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(decisions, labels) -> ConfusionCounts:
    """Counts of true/false positives/negatives."""
    decisions, labels = _check_paired(decisions, labels, "decisions", "labels")
    dec = decisions.astype(bool)
    lab = labels.astype(bool)
    return ConfusionCounts(
        tp=int(np.count_nonzero(dec & lab)),
        fp=int(np.count_nonzero(dec & ~lab)),
        tn=int(np.count_nonzero(~dec & ~lab)),
        fn=int(np.count_nonzero(~dec & lab)),
    )


def selection_rate(decisions) -> float:
    """Fraction of positive decisions."""
    decisions = np.asarray(decisions)
    if decisions.size == 0:
        raise UndefinedMetricError("selection rate undefined on empty input")
    return float(np.mean(decisions != 0))


def dpd(decisions, partition: GroupPartition) -> float:
    """Demographic parity difference: max - min per-group selection rate.

    Empty groups are skipped; fewer than two nonempty groups leaves the
    gap undefined.
    """
    decisions = np.asarray(decisions)
    rates = [
        selection_rate(decisions[ix])
        for _, ix in sorted(partition.indices_by_group.items())
        if ix.size
    ]
    if len(rates) < 2:
        raise UndefinedMetricError(
            f"dpd undefined: needs >= 2 nonempty groups, got {len(rates)}"
        )
    return float(max(rates) - min(rates))


def deodds(decisions, labels, partition: GroupPartition) -> float:
    """Equalized-odds difference: the larger of the TPR gap and FPR gap.

    A group enters the TPR gap only if it has a positive label, the FPR gap
    only if it has a negative one. A gap needs two eligible groups; if both
    gaps are short of that, the metric is undefined.
    """
    decisions, labels = _check_paired(decisions, labels, "decisions", "labels")
    tprs: list[float] = []
    fprs: list[float] = []
    for _, ix in sorted(partition.indices_by_group.items()):
        if ix.size == 0:
            continue
        dec = decisions[ix]
        lab = labels[ix]
        pos = lab == 1
        if pos.any():
            tprs.append(float(np.mean(dec[pos] != 0)))
        if (~pos).any():
            fprs.append(float(np.mean(dec[~pos] != 0)))
    gaps = []
    if len(tprs) >= 2:
        gaps.append(max(tprs) - min(tprs))
    if len(fprs) >= 2:
        gaps.append(max(fprs) - min(fprs))
    if not gaps:
        raise UndefinedMetricError(
            "deodds undefined: fewer than 2 groups have positives and fewer "
            "than 2 have negatives"
        )
    return float(max(gaps))


def _check_fraction(value: float, what: str) -> float:
    value = float(value)
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValidationError(
            f"{what} must be a fraction in [0, 1], got {value!r} "
            "(percentages are not accepted)"
        )
    return value


def discrepancy(overall: float, group_values: Mapping[int, float]) -> float:
    """Total absolute deviation of per-group values from the overall value.

    delta = sum_A |overall - group_values[A]|, in fractional units, summed
    over the groups present in the map.
    """
    overall = _check_fraction(overall, "overall value")
    if not group_values:
        raise UndefinedMetricError("discrepancy undefined for an empty group map")
    total = 0.0
    for g, v in sorted(group_values.items()):
        total += abs(overall - _check_fraction(v, f"group {g} value"))
    return total


def equity_scaled(overall: float, delta: float) -> float:
    """Deflate an overall metric by its group discrepancy: overall / (1 + delta)."""
    overall = _check_fraction(overall, "overall value")
    delta = float(delta)
    if not np.isfinite(delta) or delta < 0.0:
        raise ValidationError(f"delta must be >= 0, got {delta!r}")
    return overall / (1.0 + delta)


@dataclass(frozen=True)
class MetricReport:
    """Everything the auditor produces for one prediction set.

    Metric values are fractions; a None value means the metric was
    undefined for that slot, with a human-readable note in `undefined`.
    The invariant equity_scaled[m] == overall[m] / (1 + delta[m]) holds for
    every metric m with a defined value.
    """

    threshold: float
    overall: dict[str, float | None]
    per_group: dict[int, dict[str, float | None]]
    delta: dict[str, float | None]
    equity_scaled: dict[str, float | None]
    dpd: float | None
    deodds: float | None
    group_sizes: dict[int, int]
    undefined: tuple[str, ...]


_REPORT_METRICS = ("accuracy", "auc")


def full_report(
    records: Sequence[PredictionRecord],
    attribute_set: AttributeSet,
    threshold: float = 0.5,
) -> MetricReport:
    """Compute overall, per-group, discrepancy, and equity-scaled metrics.

    Partial failures (a single-class group, a degenerate gap) are recorded
    as flags and None values; they never abort the rest of the report.
    """
    records = tuple(records)
    if not records:
        raise UndefinedMetricError("cannot build a report from zero records")
    scores = np.array([r.score for r in records], dtype=np.float64)
    labels = np.array([r.label for r in records], dtype=np.int64)
    decisions = decide(scores, threshold)
    partition = partition_by_attribute(records, attribute_set)

    flags: list[str] = []
    overall: dict[str, float | None] = {"accuracy": accuracy(decisions, labels)}
    try:
        overall["auc"] = auc(scores, labels)
    except UndefinedMetricError as exc:
        overall["auc"] = None
        flags.append(f"overall auc undefined: {exc}")

    per_group: dict[int, dict[str, float | None]] = {}
    for gid in range(attribute_set.group_count):
        ix = partition.indices_by_group[gid]
        if ix.size == 0:
            per_group[gid] = {"accuracy": None, "auc": None}
            flags.append(f"group {gid} empty: accuracy and auc undefined")
            continue
        row: dict[str, float | None] = {
            "accuracy": accuracy(decisions[ix], labels[ix])
        }
        try:
            row["auc"] = auc(scores[ix], labels[ix])
        except UndefinedMetricError as exc:
            row["auc"] = None
            flags.append(f"auc undefined for group {gid}: {exc}")
        per_group[gid] = row

    delta: dict[str, float | None] = {}
    es: dict[str, float | None] = {}
    for name in _REPORT_METRICS:
        group_vals = {
            g: row[name] for g, row in per_group.items() if row[name] is not None
        }
        if overall[name] is None or not group_vals:
            delta[name] = None
            es[name] = None
            if overall[name] is not None:
                flags.append(f"delta undefined for {name}: no group has a value")
            continue
        delta[name] = discrepancy(overall[name], group_vals)
        es[name] = equity_scaled(overall[name], delta[name])

    try:
        dpd_value: float | None = dpd(decisions, partition)
    except UndefinedMetricError as exc:
        dpd_value = None
        flags.append(f"dpd undefined: {exc}")
    try:
        deodds_value: float | None = deodds(decisions, labels, partition)
    except UndefinedMetricError as exc:
        deodds_value = None
        flags.append(f"deodds undefined: {exc}")

    return MetricReport(
        threshold=float(threshold),
        overall=overall,
        per_group=per_group,
        delta=delta,
        equity_scaled=es,
        dpd=dpd_value,
        deodds=deodds_value,
        group_sizes=partition.sizes(),
        undefined=tuple(flags),
    )


@dataclass(frozen=True, eq=False)
class PredictionHistogram:
    """Per-bin confusion counts over uniform score bins on [0, 1].

    Bins are right-open except the last, which includes 1.0.
    """

    bins: int
    edges: np.ndarray  # length bins + 1
    counts: dict[str, np.ndarray]  # "tp"/"fp"/"tn"/"fn" -> length-bins int arrays

    def totals(self) -> ConfusionCounts:
        return ConfusionCounts(
            tp=int(self.counts["tp"].sum()),
            fp=int(self.counts["fp"].sum()),
            tn=int(self.counts["tn"].sum()),
            fn=int(self.counts["fn"].sum()),
        )


def prediction_histogram(
    records: Sequence[PredictionRecord], threshold: float = 0.5, bins: int = 20
) -> PredictionHistogram:
    """Tally TP/FP/TN/FN per uniform score bin.

    With bins = 1 the four totals equal the plain confusion counts.
    """
    if bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    records = tuple(records)
    scores = np.array([r.score for r in records], dtype=np.float64)
    labels = np.array([r.label for r in records], dtype=np.int64)
    decisions = decide(scores, threshold)
    edges = np.arange(bins + 1) / bins
    idx = np.searchsorted(edges, scores, side="right") - 1
    idx = np.minimum(idx, bins - 1)  # score exactly 1.0 stays in the last bin
    counts = {k: np.zeros(bins, dtype=np.int64) for k in ("tp", "fp", "tn", "fn")}
    kinds = np.where(
        decisions == 1,
        np.where(labels == 1, 0, 1),  # tp / fp
        np.where(labels == 1, 3, 2),  # fn / tn
    )
    names = ("tp", "fp", "tn", "fn")
    for k in range(4):
        sel = idx[kinds == k]
        if sel.size:
            np.add.at(counts[names[k]], sel, 1)
    return PredictionHistogram(bins=bins, edges=edges, counts=counts)
