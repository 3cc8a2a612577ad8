import pytest
from hypothesis import given, settings, strategies as st

from radicalocr import reasoner as R
from radicalocr.dictionary import load_dictionary
from radicalocr.errors import IndexOutOfRange, InvalidParams
from tests.helpers import result_from, slots_from
from tests.oracles import all_assignments


@pytest.fixture(scope="module")
def sample(sample_path):
    return load_dictionary(sample_path)


def test_radical_set_confidence_examples():
    assert R.radical_set_confidence(slots_from([[("a", 0.8)], [("b", 0.6)]]), (0, 0)) == pytest.approx(0.7)
    assert R.radical_set_confidence(slots_from([[("a", 1.0)], [("b", 1.0)]]), (0, 0)) == 1.0
    assert R.radical_set_confidence(slots_from([[("a", 0.4)]]), (0,)) == 0.4
    with pytest.raises(IndexOutOfRange):
        R.radical_set_confidence(slots_from([[("a", 0.4)]]), (1,))
    with pytest.raises(IndexOutOfRange):
        R.radical_set_confidence(slots_from([[("a", 0.4)]]), (0, 0))


def test_crcm_perfect(sample):
    preds = R.crcm(sample, result_from([[("swine", 1.0)], [("toe", 1.0)]], [("UD", 1.0)]))
    assert [(p.character, p.p_c) for p in preds] == [("chase", 1.0)]


def test_crcm_weighted_example(sample):
    preds = R.crcm(sample, result_from([[("swine", 0.8)], [("toe", 0.6)]], [("UD", 0.9)]))
    assert len(preds) == 1 and preds[0].character == "chase"
    assert preds[0].p_c == pytest.approx(0.7 * 0.7 + 0.3 * 0.9, abs=1e-12)
    assert preds[0].p_c == pytest.approx(0.76, abs=1e-12)


def test_crcm_recovers_from_wrong_top1(sample):
    res = result_from([[("house", 0.9), ("swine", 0.7)], [("toe", 0.8)]], [("UD", 0.9)])
    preds = R.crcm(sample, res)
    assert preds[0].character == "chase"
    assert preds[0].p_r == pytest.approx(0.75)


def test_crcm_empty_when_nothing_matches(sample):
    assert R.crcm(sample, result_from([[("house", 0.9)], [("city", 0.8)]], [("UD", 0.9)])) == []


def test_crcm_skips_arity_mismatch(sample):
    res = result_from([[("swine", 0.9)], [("toe", 0.9)]], [("CX", 0.9), ("UD", 0.1)])
    assert [p.character for p in R.crcm(sample, res)] == ["chase"]


def test_top_conf_enumerate_exhaustion_and_t1():
    slots = slots_from([[("a", 0.9), ("b", 0.2)], [("c", 0.7), ("d", 0.6)]])
    from radicalocr.detection import StructureCandidate

    structs = (StructureCandidate("UD", 0.8), StructureCandidate("LR", 0.2))
    out = R.top_conf_enumerate(slots, structs, 5)
    assert len(out) == 4 * 2
    [(a, _, s, _)] = R.top_conf_enumerate(slots, structs, 1)
    assert a == (0, 0) and s == "UD"


def test_top_assignments_three_by_three_brute_force():
    confs = [[0.9, 0.5, 0.1], [0.8, 0.7, 0.3], [0.6, 0.55, 0.2]]
    slots = slots_from([[(f"r{i}{j}", c) for j, c in enumerate(row)] for i, row in enumerate(confs)])
    want = all_assignments(confs)[:5]
    got = R.top_assignments(slots, 5)
    assert [a for a, _ in got] == [a for a, _ in want]
    assert [p for _, p in got] == [p for _, p in want]


conf = st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.9, 1.0])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.lists(conf, min_size=1, max_size=4), min_size=1, max_size=4), st.integers(1, 8))
def test_top_assignments_match_brute_force(conf_lists, t):
    # LocationSlot sorts descending (stably); mirror that before enumerating
    conf_lists = [sorted(c, reverse=True) for c in conf_lists]
    slots = slots_from([[(f"{i}:{j}", c) for j, c in enumerate(row)] for i, row in enumerate(conf_lists)])
    got = R.top_assignments(slots, t)
    want = all_assignments(conf_lists)[:t]
    assert got == want


def test_zero_shot_completeness(toy_dict):
    for e in toy_dict.entries:
        res = result_from([[(r, 1.0)] for r in e.radicals], [(e.structure, 1.0)])
        preds = R.crcm(toy_dict, res)
        assert preds[0].character == e.character and preds[0].p_c == 1.0


def test_config_validation():
    with pytest.raises(InvalidParams):
        R.ReasonerConfig(t=0)
    with pytest.raises(InvalidParams):
        R.ReasonerConfig(theta=1.5)


def test_align_slots_reorders_by_layout(layouts):
    from radicalocr.glyph import Box

    boxes = [Box(10, 150, 240, 250), Box(10, 5, 240, 120)]  # bottom first
    slots = slots_from([[("toe", 0.9)], [("swine", 0.9)]], boxes)
    aligned = R.align_slots(slots, layouts["UD"], (256, 256))
    assert [s.candidates[0].label for s in aligned] == ["swine", "toe"]


def test_predictions_json(sample):
    preds = R.crcm(sample, result_from([[("swine", 1.0)], [("toe", 1.0)]], [("UD", 1.0)]))
    assert R.predictions_json("x", preds, 5) == {"image_id": "x", "predictions": [{"character": "chase", "p_c": 1.0}]}
