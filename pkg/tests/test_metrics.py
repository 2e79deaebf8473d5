import numpy as np
import pytest

from fin_equity import (
    Attribute,
    AttributeSet,
    PredictionRecord,
    UndefinedMetricError,
    ValidationError,
    accuracy,
    auc,
    confusion,
    decide,
    deodds,
    discrepancy,
    dpd,
    equity_scaled,
    full_report,
    partition_from_ids,
    prediction_histogram,
    selection_rate,
)
from reference_fixtures import (
    RECON_DEODDS,
    RECON_DPD,
    RECON_ES_AUC_4DP,
    RECON_GROUP_AUC,
    RECON_OVERALL_AUC,
    pairs_auc,
    reconciliation_records,
)


def test_decide_threshold_is_inclusive():
    out = decide([0.2, 0.5, 0.8], 0.5)
    assert out.tolist() == [0, 1, 1]
    assert decide([0.0, 1.0], 0.0).tolist() == [1, 1]
    with pytest.raises(ValidationError):
        decide([0.5], 1.5)
    with pytest.raises(ValidationError):
        decide([1.2], 0.5)


def test_accuracy():
    assert accuracy([1, 0, 1, 1], [1, 0, 0, 1]) == 0.75
    with pytest.raises(UndefinedMetricError):
        accuracy([], [])
    with pytest.raises(ValidationError):
        accuracy([1, 0], [1])


def test_auc_textbook_case():
    assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_auc_tie_handling():
    # a tied positive/negative pair is worth exactly one half
    assert auc([0.5, 0.5], [0, 1]) == 0.5
    assert auc([0.3, 0.3, 0.3, 0.3], [0, 1, 0, 1]) == 0.5
    assert auc([0.1, 0.5, 0.5, 0.9], [0, 0, 1, 1]) == 0.875


def test_auc_perfect_and_inverted():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0


def test_auc_needs_both_classes():
    with pytest.raises(UndefinedMetricError):
        auc([0.1, 0.9], [1, 1])
    with pytest.raises(UndefinedMetricError):
        auc([0.1, 0.9], [0, 0])


def test_auc_matches_pair_counting_oracle():
    rng = np.random.default_rng(11)
    for trial in range(200):
        n = int(rng.integers(2, 60))
        # coarse grid forces plenty of ties
        scores = rng.integers(0, 8, size=n) / 7.0
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert abs(auc(scores, labels) - pairs_auc(scores, labels)) <= 1e-12


def test_confusion_and_selection_rate():
    c = confusion([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (c.tp, c.fp, c.tn, c.fn) == (2, 1, 1, 1)
    assert c.total == 5
    assert selection_rate([1, 1, 0, 0, 1]) == 0.6
    with pytest.raises(UndefinedMetricError):
        selection_rate([])


def test_dpd_max_minus_min():
    decisions = np.array([1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 1, 0])
    attrs = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2])
    part = partition_from_ids(attrs, 3)
    # rates 0.2 / 0.6 / 0.5
    assert dpd(decisions, part) == pytest.approx(0.4)


def test_dpd_skips_empty_groups_and_needs_two():
    decisions = np.array([1, 0])
    part = partition_from_ids(np.array([0, 0]), 3)
    with pytest.raises(UndefinedMetricError):
        dpd(decisions, part)
    part = partition_from_ids(np.array([0, 2]), 3)  # group 1 empty, still fine
    assert dpd(decisions, part) == 1.0


def test_deodds_takes_the_larger_gap():
    #       g0: tpr 1.0, fpr 0.0      g1: tpr 0.0, fpr 1.0
    decisions = np.array([1, 1, 0, 0, 1, 1])
    labels = np.array([1, 1, 0, 1, 0, 0])
    part = partition_from_ids(np.array([0, 0, 0, 1, 1, 1]), 2)
    assert deodds(decisions, labels, part) == 1.0


def test_deodds_eligibility_is_per_gap():
    # group 0 has only positives, group 1 only negatives: neither gap has
    # two eligible groups, so the metric is undefined
    decisions = np.array([1, 0, 1, 0])
    labels = np.array([1, 1, 0, 0])
    part = partition_from_ids(np.array([0, 0, 1, 1]), 2)
    with pytest.raises(UndefinedMetricError):
        deodds(decisions, labels, part)

    # adding a mixed group makes both gaps well defined
    decisions = np.array([1, 0, 1, 0, 1, 1])
    labels = np.array([1, 1, 0, 0, 1, 0])
    part = partition_from_ids(np.array([0, 0, 1, 1, 2, 2]), 3)
    # tprs: g0 0.5, g2 1.0 ; fprs: g1 0.5, g2 1.0
    assert deodds(decisions, labels, part) == 0.5


def test_discrepancy_and_equity_scaled():
    delta = discrepancy(0.8695, {0: 0.8929, 1: 0.8166, 2: 0.8936})
    assert delta == pytest.approx(0.1004, abs=1e-12)
    assert equity_scaled(0.8695, delta) == pytest.approx(0.8695 / 1.1004, abs=1e-15)
    # zero discrepancy leaves the metric untouched
    assert equity_scaled(0.77, 0.0) == 0.77
    assert discrepancy(0.5, {0: 0.5}) == 0.0


def test_fraction_units_are_enforced():
    with pytest.raises(ValidationError, match="percentage"):
        discrepancy(86.95, {0: 0.89})
    with pytest.raises(ValidationError):
        discrepancy(0.5, {0: 89.29})
    with pytest.raises(ValidationError):
        equity_scaled(0.5, -0.1)
    with pytest.raises(UndefinedMetricError):
        discrepancy(0.5, {})


def test_full_report_on_reconciliation_fixture():
    """End-to-end audit of a set with hand-counted pair totals."""
    records, attribute_set = reconciliation_records()
    rep = full_report(records, attribute_set, threshold=0.5)
    assert rep.overall["auc"] == RECON_OVERALL_AUC
    for g, expected in RECON_GROUP_AUC.items():
        assert rep.per_group[g]["auc"] == expected
    assert round(rep.equity_scaled["auc"], 4) == RECON_ES_AUC_4DP
    assert rep.dpd == pytest.approx(RECON_DPD, abs=1e-12)
    assert rep.deodds == pytest.approx(RECON_DEODDS, abs=1e-12)
    assert rep.overall["accuracy"] == pytest.approx(23 / 30)
    assert rep.group_sizes == {0: 200, 1: 200, 2: 200}
    assert rep.undefined == ()
    # the defining identity of the equity-scaled family
    for name in ("accuracy", "auc"):
        assert rep.equity_scaled[name] == pytest.approx(
            rep.overall[name] / (1.0 + rep.delta[name]), abs=1e-15
        )
        assert rep.equity_scaled[name] <= rep.overall[name]


def test_full_report_flags_undefined_instead_of_imputing():
    records = [
        PredictionRecord(id="a", score=0.9, label=1, attribute=Attribute(0)),
        PredictionRecord(id="b", score=0.1, label=1, attribute=Attribute(0)),
        PredictionRecord(id="c", score=0.8, label=1, attribute=Attribute(1)),
    ]
    rep = full_report(records, AttributeSet.default(3), threshold=0.5)
    assert rep.overall["auc"] is None  # single-class overall
    assert rep.per_group[0]["auc"] is None
    assert rep.per_group[2]["accuracy"] is None  # empty group
    assert rep.delta["auc"] is None
    assert rep.equity_scaled["auc"] is None
    assert rep.group_sizes == {0: 2, 1: 1, 2: 0}
    assert any("group 2 empty" in f for f in rep.undefined)
    assert any("overall auc undefined" in f for f in rep.undefined)
    # accuracy is still defined everywhere it can be
    assert rep.overall["accuracy"] == pytest.approx(2 / 3)
    assert rep.equity_scaled["accuracy"] is not None


def test_full_report_rejects_empty_input():
    with pytest.raises(UndefinedMetricError):
        full_report([], AttributeSet.default(1))


def recs(scores, labels):
    return [
        PredictionRecord(id=f"r{i}", score=s, label=l, attribute=Attribute(0))
        for i, (s, l) in enumerate(zip(scores, labels))
    ]


def test_histogram_hand_case():
    records = recs(
        [0.0, 0.25, 0.5, 0.74, 0.75, 1.0],
        [0, 1, 1, 0, 1, 0],
    )
    hist = prediction_histogram(records, threshold=0.5, bins=4)
    assert hist.edges.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert hist.counts["tn"].tolist() == [1, 0, 0, 0]
    assert hist.counts["fn"].tolist() == [0, 1, 0, 0]
    assert hist.counts["tp"].tolist() == [0, 0, 1, 1]
    assert hist.counts["fp"].tolist() == [0, 0, 1, 1]


def test_histogram_totals_match_confusion():
    rng = np.random.default_rng(3)
    scores = rng.random(500)
    labels = rng.integers(0, 2, size=500)
    records = recs(scores, labels)
    hist = prediction_histogram(records, threshold=0.4, bins=20)
    c = confusion(decide(scores, 0.4), labels)
    assert hist.totals() == c
    total = sum(int(hist.counts[k].sum()) for k in ("tp", "fp", "tn", "fn"))
    assert total == 500


def test_histogram_single_bin_is_plain_confusion():
    records = recs([0.1, 0.6, 0.9], [0, 0, 1])
    hist = prediction_histogram(records, threshold=0.5, bins=1)
    t = hist.totals()
    assert (t.tp, t.fp, t.tn, t.fn) == (1, 1, 1, 0)
    with pytest.raises(ValidationError):
        prediction_histogram(records, bins=0)
