import math

import numpy as np
import pytest

from fin_equity import (
    GroupSpec,
    SynthConfig,
    ValidationError,
    auc,
    bayes_scores,
    default_benchmark,
    generate,
    synth_config_from_dict,
    synth_config_to_dict,
)


def spec(name="g", n_train=40, n_eval=20, prevalence=0.5, separation=2.0, offset=0.0):
    return GroupSpec(
        name=name,
        n_train=n_train,
        n_eval=n_eval,
        prevalence=prevalence,
        separation=separation,
        offset=offset,
    )


def two_group_config(seed=0):
    return SynthConfig(
        d=4,
        seed=seed,
        groups=(
            spec("g0", prevalence=0.474, offset=1.0),
            spec("g1", prevalence=0.614, separation=1.2, offset=-1.0),
        ),
    )


def test_exact_class_counts():
    config = two_group_config()
    train, evaluation = generate(config)
    labels = train.label_vector()
    attrs = train.attr_vector()
    # floor(p * n + 0.5): 0.474 * 40 = 18.96 -> 19 ; 0.614 * 40 = 24.56 -> 25
    assert int(labels[attrs == 0].sum()) == 19
    assert int(labels[attrs == 1].sum()) == 25
    ev_labels = evaluation.label_vector()
    ev_attrs = evaluation.attr_vector()
    # 0.474 * 20 = 9.48 -> 9 ; 0.614 * 20 = 12.28 -> 12
    assert int(ev_labels[ev_attrs == 0].sum()) == 9
    assert int(ev_labels[ev_attrs == 1].sum()) == 12


def test_half_up_rounding_of_prevalence():
    config = SynthConfig(d=2, groups=(spec(n_train=2, n_eval=2, prevalence=0.25),))
    train, _ = generate(config)
    # 0.25 * 2 = 0.5 rounds up, independent of integer parity
    assert int(train.label_vector().sum()) == 1


def test_sizes_and_ids():
    train, evaluation = generate(two_group_config())
    assert len(train) == 80 and len(evaluation) == 40
    ids = train.ids()
    assert len(set(ids)) == len(ids)
    assert all(i.startswith("tr-g") for i in ids)
    assert all(i.startswith("ev-g") for i in evaluation.ids())
    assert train.attribute_set.names == ("g0", "g1")
    # id encodes the group: tr-g{gid}-{index}
    for s in train.samples:
        assert s.sample_id.split("-")[1] == f"g{s.attribute.id}"


def test_generation_is_deterministic():
    a_train, a_eval = generate(two_group_config(seed=3))
    b_train, b_eval = generate(two_group_config(seed=3))
    assert np.array_equal(a_train.feature_matrix(), b_train.feature_matrix())
    assert np.array_equal(a_eval.feature_matrix(), b_eval.feature_matrix())
    assert a_train.ids() == b_train.ids()
    c_train, _ = generate(two_group_config(seed=4))
    assert not np.array_equal(a_train.feature_matrix(), c_train.feature_matrix())


def test_split_order_is_shuffled_but_canonical_under_the_ids():
    train, _ = generate(two_group_config(seed=1))
    assert list(train.ids()) != sorted(train.ids())  # a shuffle happened
    # sorting by id recovers the build order: all label-0 rows of a group
    # come before its label-1 rows
    by_id = sorted(train.samples, key=lambda s: s.sample_id)
    for gid in (0, 1):
        labels = [s.label for s in by_id if s.attribute.id == gid]
        assert labels == sorted(labels)


def test_group_feature_structure():
    config = SynthConfig(
        d=3,
        seed=5,
        groups=(spec("a", n_train=4000, n_eval=10, offset=2.0, separation=1.5),),
    )
    train, _ = generate(config)
    x = train.feature_matrix()
    labels = train.label_vector()
    # off-signal coordinates sit at the group offset
    assert np.mean(x[:, 1]) == pytest.approx(2.0, abs=0.1)
    assert np.mean(x[:, 2]) == pytest.approx(2.0, abs=0.1)
    # the first coordinate carries the class separation
    gap = np.mean(x[labels == 1, 0]) - np.mean(x[labels == 0, 0])
    assert gap == pytest.approx(1.5, abs=0.12)
    assert np.std(x[labels == 0, 0]) == pytest.approx(1.0, abs=0.08)


def test_bayes_scores_remove_the_offset():
    config = two_group_config(seed=2)
    train, _ = generate(config)
    scores = bayes_scores(train, config)
    x0 = train.feature_matrix()[:, 0]
    attrs = train.attr_vector()
    offsets = np.where(attrs == 0, 1.0, -1.0)
    assert np.allclose(scores, x0 - offsets, atol=1e-15)


def test_bayes_auc_approaches_the_closed_form():
    # per-group optimal AUC is Phi(separation / sqrt(2)) for unit noise
    config = SynthConfig(
        d=2,
        seed=11,
        groups=(spec("a", n_train=2, n_eval=3000, separation=2.0, offset=0.7),),
    )
    _, evaluation = generate(config)
    scores = bayes_scores(evaluation, config)
    empirical = auc(scores, evaluation.label_vector())
    closed = 0.5 * (1.0 + math.erf(2.0 / 2.0))
    assert closed == pytest.approx(0.9214, abs=5e-5)
    assert empirical == pytest.approx(closed, abs=0.02)


def test_default_benchmark_shape():
    config = default_benchmark()
    assert config.d == 20 and config.seed == 42
    assert tuple(g.name for g in config.groups) == ("group0", "group1", "group2")
    assert [g.separation for g in config.groups] == [2.0, 1.2, 1.8]
    assert [g.offset for g in config.groups] == [1.0, -1.0, 0.0]
    assert [g.prevalence for g in config.groups] == [0.474, 0.614, 0.484]
    assert all(g.n_train == 1000 and g.n_eval == 300 for g in config.groups)
    assert all(g.noise_std == 1.0 for g in config.groups)


def test_config_round_trip():
    config = default_benchmark(seed=9)
    again = synth_config_from_dict(synth_config_to_dict(config))
    assert again == config
    with pytest.raises(ValidationError):
        synth_config_from_dict({"groups": []})


def test_group_spec_validation():
    with pytest.raises(ValidationError):
        spec(prevalence=0.0)
    with pytest.raises(ValidationError):
        spec(prevalence=1.0)
    with pytest.raises(ValidationError):
        spec(separation=-0.5)
    with pytest.raises(ValidationError):
        spec(n_train=0)
    with pytest.raises(ValidationError):
        GroupSpec("g", 2, 2, 0.5, 1.0, 0.0, noise_std=0.0)
    with pytest.raises(ValidationError):
        SynthConfig(d=1, groups=(spec(),))
    with pytest.raises(ValidationError):
        SynthConfig(d=4, groups=(spec("same"), spec("same")))
    with pytest.raises(ValidationError):
        SynthConfig(d=4, groups=())
