import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tkm import dataeval as de
from tkm.errors import ArgumentError, GenerationError

# --- synthetic generation ---------------------------------------------------


def test_source_preset_counts():
    ds = de.gen_synthetic(de.preset("source", seed=0))
    assert len(ds) == 600
    assert int((ds.y > 0).sum()) == 100
    assert int((ds.y < 0).sum()) == 500
    assert np.all(np.abs(ds.X) < 1)


def test_preset_means():
    assert de.preset("source").means == ((-0.4, 0.5), (0.5, 0.7), (-0.1, -0.6))
    assert de.preset("target").means == ((-0.4, 0.3), (0.5, 0.3), (0.0, -0.65))
    with pytest.raises(ArgumentError):
        de.preset("other")


def test_no_positives():
    ds = de.gen_synthetic(de.preset("target", seed=1, n_pos=0))
    assert np.all(ds.y == -1)


def test_negatives_outside_exclusion_region():
    spec = de.preset("target", seed=3)
    ds = de.gen_synthetic(spec)
    assert not spec.in_exclusion_region(ds.X[ds.y < 0]).any()


def test_generation_deterministic():
    a = de.gen_synthetic(de.preset("source", seed=5))
    b = de.gen_synthetic(de.preset("source", seed=5))
    c = de.gen_synthetic(de.preset("source", seed=6))
    assert a.X.tobytes() == b.X.tobytes() and a.y.tobytes() == b.y.tobytes()
    assert a.X.tobytes() != c.X.tobytes()


def test_generation_error():
    spec = de.preset("source", exclusion_radius=50.0, max_attempts=1000)
    with pytest.raises(GenerationError):
        de.gen_synthetic(spec)


def test_mixture_spec_validation():
    with pytest.raises(ArgumentError):
        de.MixtureSpec(n_pos=-1)


def test_dataset_validation():
    with pytest.raises(ArgumentError):
        de.LabeledDataset([[0.0]], [0])
    with pytest.raises(ArgumentError):
        de.LabeledDataset([[np.inf]], [1])
    with pytest.raises(ArgumentError):
        de.LabeledDataset([[0.0], [1.0]], [1, -1], start_s=[0.0, 1.0], dur_s=[2.0, 2.0])


# --- class weights ----------------------------------------------------------


def test_class_weights_balanced():
    assert de.class_weights([1, -1, 1, -1]) == (1.0, 1.0)


def test_class_weights_600_100():
    y = np.r_[np.ones(100), -np.ones(500)]
    c_pos, c_neg = de.class_weights(y)
    assert c_pos == pytest.approx(3.0, rel=1e-15)
    assert c_neg == pytest.approx(0.6, rel=1e-15)


def test_class_weights_missing_class():
    with pytest.raises(ArgumentError):
        de.class_weights([1, 1, 1])


@settings(max_examples=100)
@given(st.lists(st.sampled_from([-1, 1]), min_size=2, max_size=200))
def test_class_weight_identity(labels):
    y = np.array(labels)
    n_pos = int((y > 0).sum())
    if n_pos in (0, y.size):
        return
    c_pos, c_neg = de.class_weights(y)
    assert c_pos * n_pos + c_neg * (y.size - n_pos) == pytest.approx(y.size, rel=1e-14)
    assert de.sample_weights(y).sum() == pytest.approx(y.size, rel=1e-14)


# --- undersampling ------------------------------------------------------------


def _imbalanced(n_pos=100, n_neg=5000):
    rng = np.random.default_rng(0)
    y = np.r_[np.ones(n_pos), -np.ones(n_neg)]
    return de.LabeledDataset(rng.standard_normal((y.size, 2)), y)


def test_undersample_ratio():
    out = de.undersample(_imbalanced(), 10, seed=0)
    assert int((out.y > 0).sum()) == 100
    assert int((out.y < 0).sum()) == 1000


def test_undersample_disabled():
    ds = _imbalanced()
    assert de.undersample(ds, math.inf, seed=0) is ds


def test_undersample_seeds():
    ds = _imbalanced()
    a, b = de.undersample(ds, 10, seed=1), de.undersample(ds, 10, seed=2)
    neg_a = {tuple(r) for r in a.X[a.y < 0]}
    neg_b = {tuple(r) for r in b.X[b.y < 0]}
    assert neg_a - neg_b
    np.testing.assert_array_equal(a.X[a.y > 0], ds.X[ds.y > 0])
    np.testing.assert_array_equal(b.X[b.y > 0], ds.X[ds.y > 0])


def test_undersample_insufficient_warns():
    ds = _imbalanced(100, 300)
    with pytest.warns(de.UndersampleWarning):
        out = de.undersample(ds, 10, seed=0)
    assert len(out) == 400


def test_undersample_keeps_timing_sorted():
    n = 50
    y = np.where(np.arange(n) % 10 == 0, 1.0, -1.0)
    ds = de.LabeledDataset(np.zeros((n, 1)), y, np.arange(n) * 2.0, np.full(n, 2.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = de.undersample(ds, 2, seed=0)
    assert np.all(np.diff(out.start_s) > 0)


# --- scaling --------------------------------------------------------------------


def test_scaling_midpoint_and_endpoints():
    X = np.array([[0.0], [10.0], [4.0]])
    p = de.scale_fit(X)
    Xs, clamped = de.scale_apply(np.array([[5.0], [0.0], [10.0]]), p)
    np.testing.assert_allclose(Xs[:, 0], [0.0, -0.5, 0.5], atol=1e-15)
    assert clamped == 0


def test_scaling_clamps():
    p = de.scale_fit(np.array([[0.0], [10.0]]))
    Xs, clamped = de.scale_apply(np.array([[12.0], [-3.0]]), p)
    np.testing.assert_array_equal(Xs[:, 0], [0.5, -0.5])
    assert clamped == 2


def test_scaling_constant_feature():
    p = de.scale_fit(np.array([[3.0, 0.0], [3.0, 1.0]]), (-1.0, 1.0))
    Xs, _ = de.scale_apply(np.array([[7.0, 0.5]]), p)
    np.testing.assert_allclose(Xs, [[0.0, 0.0]], atol=1e-15)


def test_scaling_roundtrip():
    p = de.scale_fit(np.array([[0.0, -2.0], [1.0, 5.0]]))
    q = de.ScalingParams.from_dict(p.to_dict())
    np.testing.assert_array_equal(p.min, q.min)
    np.testing.assert_array_equal(p.max, q.max)


# --- segment metrics --------------------------------------------------------------


def test_auroc_separated():
    assert de.segment_roc([0.9, 0.8, 0.2, 0.1], [1, 1, -1, -1]).auc == 1.0


def test_auroc_ties():
    assert de.segment_roc([0.3] * 6, [1, -1, 1, -1, -1, 1]).auc == pytest.approx(0.5)


def test_auroc_hand_case():
    # pos/neg pairs: (0.9>0.8), (0.9>0.1), (0.3<0.8), (0.3>0.1) -> 3 of 4
    assert de.segment_roc([0.9, 0.8, 0.3, 0.1], [1, -1, 1, -1]).auc == pytest.approx(0.75)


def test_auroc_matches_pair_count(rng):
    s = np.round(rng.standard_normal(80), 1)
    y = np.where(rng.random(80) < 0.3, 1, -1)
    sp, sn = s[y > 0], s[y < 0]
    ref = ((sp[:, None] > sn[None, :]) + 0.5 * (sp[:, None] == sn[None, :])).mean()
    assert de.segment_roc(s, y).auc == pytest.approx(ref, rel=1e-12)


def test_auroc_one_class():
    with pytest.raises(ArgumentError):
        de.segment_roc([0.1, 0.2], [1, 1])


def test_segment_metrics():
    m = de.segment_metrics([1, 1, -1, -1, 1], [1, -1, 1, -1, 1])
    assert m.sensitivity == pytest.approx(2 / 3)
    assert m.precision == pytest.approx(2 / 3)
    assert m.specificity == pytest.approx(0.5)
    assert de.f1_score([1, -1], [-1, -1]) == 0.0


def test_threshold_for_sensitivity():
    s = np.array([0.9, 0.7, 0.5, 0.3, 0.2])
    y = np.array([1, 1, 1, 1, -1])
    t = de.threshold_for_sensitivity(s, y, 0.75)
    assert t == 0.5
    assert ((s >= t) & (y > 0)).sum() / 4 >= 0.75


# --- events -------------------------------------------------------------------------


def test_events_ten_positives():
    labels = [-1] * 5 + [1] * 10 + [-1] * 5
    assert de.postprocess_events(labels) == [(5, 14)]


def test_events_isolated_positive():
    labels = [-1] * 10 + [1] + [-1] * 10
    assert de.postprocess_events(labels) == []


def test_events_eight_of_ten():
    labels = [1, 1, -1, 1, 1, 1, -1, 1, 1, 1]
    assert de.postprocess_events(labels) == [(0, 9)]


def test_events_seven_of_ten_does_not_fire():
    assert de.postprocess_events([1, 1, -1, 1, 1, -1, 1, -1, 1, 1]) == []


def test_events_short_sequence():
    assert de.postprocess_events([1] * 9) == []


def test_events_bad_args():
    with pytest.raises(ArgumentError):
        de.postprocess_events([1] * 20, k=11, n=10)


def test_events_two_separate():
    labels = [1] * 10 + [-1] * 15 + [1] * 10
    assert de.postprocess_events(labels) == [(0, 9), (25, 34)]


@settings(max_examples=100)
@given(
    st.lists(st.sampled_from([-1, 1]), max_size=80),
    st.integers(0, 20),
)
def test_events_invariant_under_trailing_negatives(labels, pad):
    events = de.postprocess_events(labels)
    assert de.postprocess_events(labels + [-1] * pad) == events
    flat = [i for ev in events for i in ev]
    assert flat == sorted(flat)
    assert all(b < c for (_, b), (c, _) in zip(events, events[1:]))


def test_segments_to_seconds():
    start = np.arange(20) * 2.0
    dur = np.full(20, 2.0)
    assert de.segments_to_seconds([(3, 5)], start, dur) == [(6.0, 12.0)]


# --- any-overlap scoring ------------------------------------------------------------------


def test_overlap_identical():
    ev = [(0.0, 10.0), (50.0, 60.0)]
    m = de.any_overlap_score(ev, ev, 3600.0)
    assert (m.sensitivity, m.precision, m.f1, m.fa_per_24h) == (1.0, 1.0, 1.0, 0.0)


def test_overlap_no_predictions():
    m = de.any_overlap_score([], [(0.0, 10.0)], 3600.0)
    assert (m.sensitivity, m.precision, m.f1) == (0.0, 0.0, 0.0)


def test_overlap_hand_case():
    true = [(100.0, 200.0), (1000.0, 1100.0)]
    pred = [(150.0, 160.0), (400.0, 410.0), (2000.0, 2010.0)]
    m = de.any_overlap_score(pred, true, 7200.0)
    assert m.sensitivity == 0.5
    assert m.precision == pytest.approx(1 / 3)
    assert m.f1 == pytest.approx(2 * 0.5 * (1 / 3) / (0.5 + 1 / 3))
    assert m.fa_per_24h == pytest.approx(2 * 86400 / 7200)
    assert m.n_false_alarms == 2


def test_overlap_swap_roles():
    true = [(100.0, 200.0), (1000.0, 1100.0)]
    pred = [(150.0, 160.0), (400.0, 410.0), (2000.0, 2010.0)]
    a = de.any_overlap_score(pred, true, 7200.0)
    b = de.any_overlap_score(true, pred, 7200.0)
    assert (a.sensitivity, a.precision) == (b.precision, b.sensitivity)


def test_overlap_touching_is_not_overlap():
    m = de.any_overlap_score([(10.0, 20.0)], [(20.0, 30.0)], 100.0)
    assert m.sensitivity == 0.0


def test_overlap_rejects_overlapping_list():
    with pytest.raises(ArgumentError):
        de.any_overlap_score([(0.0, 10.0), (5.0, 15.0)], [], 100.0)
    with pytest.raises(ArgumentError):
        de.any_overlap_score([], [], 0.0)


def test_event_metrics_json_names():
    d = de.any_overlap_score([(0.0, 1.0)], [(0.0, 1.0)], 10.0).to_dict()
    assert {"sensitivity", "precision", "f1", "fa_per_24h"} <= set(d)
