from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from radicalocr import evaluation as E
from radicalocr.errors import EmptyGroundTruth, EmptyInput, InvalidParams, Overlap
from radicalocr.glyph import Box
from tests.oracles import ap50_oracle, catavg_oracle, topk_oracle


def lp(truth, *preds):
    return E.LabeledPrediction("i", truth, tuple(preds))


def test_top_k_basic():
    preds = [lp("a", "a", "b"), lp("b", "a", "b"), lp("c", "a", "b")]
    assert E.top_k_accuracy(preds, 1) == pytest.approx(1 / 3)
    assert E.top_k_accuracy(preds, 2) == pytest.approx(2 / 3)
    with pytest.raises(InvalidParams):
        E.top_k_accuracy(preds, 0)
    with pytest.raises(EmptyInput):
        E.top_k_accuracy([], 1)


def test_duplicates_in_ranking_count_once():
    assert E.top_k_accuracy([lp("b", "a", "a", "b")], 2) == 1.0


def test_cat_avg_unbalanced():
    preds = [lp("a", "a")] * 9 + [lp("b", "a")]
    assert E.top_k_accuracy(preds, 1) == pytest.approx(0.9)
    assert E.cat_avg(preds) == pytest.approx(0.5)
    single = [lp("a", "a"), lp("a", "b")]
    assert E.cat_avg(single) == E.top_k_accuracy(single, 1)


def _rec(gts, dets):
    return E.DetectionEvalRecord(
        "i", tuple((l, Box(*b)) for l, b in gts), tuple((l, c, Box(*b)) for l, c, b in dets)
    )


def test_ap_hand_examples():
    gt = [("r", (0, 0, 10, 10))]
    good, bad = (0, 0, 10, 10), (50, 50, 60, 60)
    assert E.ap50([_rec(gt, [("r", 0.9, good), ("r", 0.8, bad)])]) == 1.0
    assert E.ap50([_rec(gt, [("r", 0.8, good), ("r", 0.9, bad)])]) == 0.5


def test_ap_no_predictions_and_no_gt():
    assert E.ap50([_rec([("r", (0, 0, 1, 1))], [])]) == 0.0
    with pytest.raises(EmptyGroundTruth):
        E.ap50([_rec([], [("r", 0.5, (0, 0, 1, 1))])])


def test_average_precision_direct():
    assert E.average_precision([1, 0, 1], 2) == pytest.approx((1 + 2 / 3) / 2)


def test_split_protocol():
    cats = [f"c{i}" for i in range(58)]
    spec = E.make_zero_shot_split(cats, 30, 20)
    assert len(spec.seen_categories) == 30 and len(spec.unseen_categories) == 20
    assert len(spec.excluded) == 8
    assert not set(spec.seen_categories) & set(spec.unseen_categories)
    assert spec.unseen_categories == tuple(cats[-20:])
    with pytest.raises(Overlap):
        E.make_zero_shot_split(cats[:40], 30, 20)


def test_split_seen_samples_deterministic():
    cats = ["a", "b", "c"]
    spec = E.make_zero_shot_split(cats, 2, 1, seed=3)
    samples = [(c, f"{c}{i}") for c in cats for i in range(10)]
    tr, te = E.split_seen_samples(samples, spec)
    assert len(tr) == 16 and len(te) == 4
    assert all(c != "c" for c, _ in tr + te)
    assert E.split_seen_samples(samples[::-1], spec) == (tr, te)


labels = st.sampled_from("abc")
samples = st.lists(st.tuples(labels, st.lists(labels, max_size=5)), min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(samples, st.integers(1, 5))
def test_top_k_and_cat_avg_match_oracle(data, k):
    preds = [lp(t, *r) for t, r in data]
    assert E.top_k_accuracy(preds, k) == pytest.approx(float(topk_oracle(data, k)), abs=1e-12)
    assert E.cat_avg(preds) == pytest.approx(float(catavg_oracle(data)), abs=1e-12)


box = st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(1, 4), st.integers(1, 4)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3])
)
image = st.tuples(
    st.lists(st.tuples(labels, box), max_size=3),
    st.lists(st.tuples(labels, st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]), box), max_size=5),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(image, min_size=1, max_size=4))
def test_ap50_matches_oracle(records):
    if not any(gts for gts, _ in records):
        return
    got = E.ap50([_rec(g, d) for g, d in records])
    assert got == pytest.approx(float(ap50_oracle(records)), abs=1e-12)
