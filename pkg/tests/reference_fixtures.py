"""Shared oracles and reference data for the test suite.

pairs_auc is an independent AUC implementation (all positive/negative pairs
counted directly, ties worth 1/2) used to cross-check the rank-based one.

reconciliation_records builds a 600-record prediction set whose overall and
per-group AUCs are exact four-decimal values, so the equity-scaled pipeline
can be checked end to end against hand-counted pair totals:

    overall 0.8695, groups 0.8929 / 0.8166 / 0.8936
    delta 0.1004, es-auc 0.7902 (4 dp), dpd 0.495, deodds 0.7

The construction places each group's records in disjoint score bands and
lifts a controlled number of positives above everything, so every win count
is a product or sum of small integers: within-group wins 8929 + 8166 + 8936
and cross-group wins 52224 give 78255 of 90000 pairs overall.
"""

import numpy as np

from fin_equity import Attribute, AttributeSet, PredictionRecord


def pairs_auc(scores, labels):
    """Mann-Whitney AUC by direct pair counting; ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    sp = scores[labels == 1]
    sn = scores[labels == 0]
    if sp.size == 0 or sn.size == 0:
        raise ValueError("needs both classes")
    diff = sp[:, None] - sn[None, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return wins / (sp.size * sn.size)


# (count, group, label) runs in ascending score order; slot i scores (i+1)/601
RECON_RUNS = (
    (18, 1, 1), (66, 1, 0), (1, 1, 1), (34, 1, 0),
    (10, 2, 1), (36, 2, 0), (1, 2, 1), (64, 2, 0), (28, 2, 1),
    (10, 0, 1), (24, 0, 0), (1, 2, 1), (5, 0, 0), (1, 0, 1), (71, 0, 0), (89, 0, 1),
    (81, 1, 1), (60, 2, 1),
)

RECON_OVERALL_AUC = 78255 / 90000  # == 0.8695 exactly at 4 decimals
RECON_GROUP_AUC = {0: 8929 / 10000, 1: 8166 / 10000, 2: 8936 / 10000}
RECON_ES_AUC_4DP = 0.7902
RECON_DPD = 0.495
RECON_DEODDS = 0.7


def reconciliation_records():
    records = []
    slot = 0
    for count, group, label in RECON_RUNS:
        for _ in range(count):
            records.append(
                PredictionRecord(
                    id=f"x{slot:03d}",
                    score=(slot + 1) / 601.0,
                    label=label,
                    attribute=Attribute(group),
                )
            )
            slot += 1
    assert slot == 600
    return tuple(records), AttributeSet.default(3)


def numeric_grad(loss_fn, param, h=1e-5):
    """Central-difference gradient of loss_fn w.r.t. param, in place.

    loss_fn takes no arguments and must read the live param array, which is
    perturbed one entry at a time and restored.
    """
    grad = np.zeros_like(param, dtype=np.float64)
    flat = param.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = loss_fn()
        flat[i] = orig - h
        lo = loss_fn()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * h)
    return grad


def max_rel_err(analytic, numeric, floor=1e-6):
    """Worst elementwise relative error, floored to tolerate exact zeros."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0
