import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radicalocr import detection as D
from radicalocr import glyph as G
from radicalocr import synthesis as S
from radicalocr._kernels import resize_nearest
from radicalocr.errors import EmptyTraining, ParseError, RangeError
from tests.helpers import make_grid
from tests.oracles import nms_subset_oracle


@pytest.fixture(scope="module")
def bank(radical_set, layouts):
    cfg = S.SynthesisConfig.identity(n=40, seed=0)
    train = S.gen_img_set(radical_set, ["UD", "LR"], cfg, layouts)
    return D.build_templates(train)


def _ai(arr, label):
    g = G.Glyph(arr)
    return G.AnnotatedImage(g, label, (label,), (G.Box(0, 0, g.width, g.height),), "Single")


def test_templates_single_crop_is_resized_crop():
    rng = np.random.default_rng(0)
    arr = rng.integers(0, 256, (20, 12)).astype(np.uint8)
    bank = D.build_templates([_ai(arr, "a")], patch=8)
    assert np.array_equal(bank.centroids[0], resize_nearest(arr, 8, 8).astype(float))


def test_templates_two_crops_pixel_mean():
    a = np.full((8, 8), 0, np.uint8)
    b = np.full((8, 8), 200, np.uint8)
    b[2, 3] = 17
    bank = D.build_templates([_ai(a, "r"), _ai(b, "r")], patch=8)
    assert bank.counts == (2,)
    assert np.array_equal(bank.centroids[0], (a.astype(float) + b) / 2)
    same = D.build_templates([_ai(b, "r"), _ai(b, "r")], patch=8)
    assert np.array_equal(same.centroids[0], b.astype(float))


def test_templates_empty():
    with pytest.raises(EmptyTraining):
        D.build_templates([])


def test_bank_save_load(bank, tmp_path):
    bank.save(tmp_path / "b.npz")
    back = D.TemplateBank.load(tmp_path / "b.npz")
    assert back.labels == bank.labels and np.array_equal(back.centroids, bank.centroids)
    assert np.array_equal(back.normalized, bank.normalized)


def test_closed_loop_ud(bank, radical_set, layouts):
    ai = S.generate_img([("swine", radical_set["swine"][0]), ("toe", radical_set["toe"][0])], layouts["UD"])
    res = D.detect(ai.glyph, bank, layouts)
    assert res.structures[0].label == "UD"
    assert [s.candidates[0].label for s in res.slots] == ["swine", "toe"]


def test_blank_image_uniform(bank, layouts):
    res = D.detect(G.blank(256, 256), bank, layouts)
    assert all(s.conf == pytest.approx(1 / len(layouts)) for s in res.structures)


def test_single_template_image(bank, radical_set, layouts):
    ai = S.generate_img([("moon", radical_set["moon"][0])], layouts["Single"])
    res = D.detect(ai.glyph, bank, layouts)
    assert res.structures[0].label == "Single"
    top = res.slots[0].candidates[0]
    assert top.label == "moon"
    assert top.conf == max(c.conf for c in res.slots[0].candidates)


def test_detect_deterministic_and_sorted(bank, radical_set, layouts):
    cfg = S.SynthesisConfig(n=2, seed=9)
    for ai in S.gen_img_set(radical_set, ["UMD"], cfg, layouts):
        a = D.detect(ai.glyph, bank, layouts)
        b = D.detect(ai.glyph, bank, layouts)
        assert a.to_json() == b.to_json()
        confs = [s.conf for s in a.structures]
        assert confs == sorted(confs, reverse=True)
        for slots in a.hypotheses.values():
            for slot in slots:
                cc = [c.conf for c in slot.candidates]
                assert cc == sorted(cc, reverse=True)


def test_ingest_json(tmp_path):
    doc = {
        "image_id": "a",
        "slots": [
            [{"label": f"r{k}", "conf": 0.1 * k, "box": [0, 0, 10, 10]} for k in range(3)],
            [{"label": f"r{k}", "conf": 0.2, "box": [10, 0, 20, 10]} for k in range(3)],
        ],
        "structures": [{"label": "LR", "conf": 0.4}, {"label": "UD", "conf": 0.6}],
    }
    p = tmp_path / "p.jsonl"
    p.write_text(json.dumps(doc) + "\n")
    [res] = D.ingest_predictions(p)
    assert len(res.slots) == 2
    assert res.slots[0].candidates[0].label == "r2"
    assert res.structures[0].label == "UD"
    D.write_predictions([res], tmp_path / "q.jsonl")
    assert D.ingest_predictions(tmp_path / "q.jsonl")[0].to_json() == res.to_json()


@pytest.mark.parametrize("conf", [1.3, -0.1])
def test_ingest_range_error(tmp_path, conf):
    doc = {"image_id": "a", "slots": [[{"label": "r", "conf": conf, "box": [0, 0, 1, 1]}]],
           "structures": [{"label": "Single", "conf": 1.0}]}
    p = tmp_path / "p.jsonl"
    p.write_text(json.dumps(doc) + "\n")
    with pytest.raises(RangeError):
        D.ingest_predictions(p)


def test_ingest_parse_error_carries_line(tmp_path):
    p = tmp_path / "p.jsonl"
    p.write_text("\n{not json}\n")
    with pytest.raises(ParseError) as exc:
        D.ingest_predictions(p)
    assert exc.value.line == 2


def test_grid_overlapping_same_class_keeps_higher_objectness():
    K, M, n_r = 13, 3, 5
    onehot = lambda k: [1.0 if i == k else 0.0 for i in range(n_r)]
    # both boxes 2x2 cells; the second is shifted 1/9 of its width -> IoU 0.8
    grid = make_grid(K, M, n_r, {
        (4, 4, 0): (onehot(2), 0.5, 0.5, 2.0, 2.0, 0.9),
        (4, 4, 1): (onehot(2), 0.5 + 2 / 9, 0.5, 2.0, 2.0, 0.7),
    })
    dets = D.grid_detections(grid, K, M, n_r)
    assert D.nms([dets[1]], 0.5) == [dets[1]]
    a, b = (G.Box(*d.box) for d in dets)
    assert G.iou(a, b) == pytest.approx(0.8, abs=1e-12)
    kept = D.nms(dets)
    assert len(kept) == 1 and kept[0].objectness == 0.9


def test_grid_size_mismatch():
    with pytest.raises(ParseError):
        D.grid_detections([0.0] * 10, 13, 3, 5)


det_strategy = st.lists(
    st.tuples(st.integers(0, 2), st.sampled_from([0.55, 0.6, 0.7, 0.8, 0.9]),
              st.integers(0, 6), st.integers(0, 6), st.integers(1, 4), st.integers(1, 4)),
    min_size=0, max_size=8,
)


def _grid_dets(raw):
    return [
        D.GridDetection(c, o, (float(x), float(y), float(x + w), float(y + h)), (0.0,))
        for c, o, x, y, w, h in raw
    ]


@settings(max_examples=200, deadline=None)
@given(det_strategy, st.randoms())
def test_nms_matches_oracle_and_is_order_independent(raw, rnd):
    dets = _grid_dets(raw)
    key = lambda d: (-d.objectness, d.cls, d.box, d.scores)
    kept = D.nms(dets)
    # exact duplicates tie on the key; the index makes the order total
    want = nms_subset_oracle([((key(d), i), d.cls, d.box) for i, d in enumerate(dets)], 0.5)
    assert sorted(map(key, kept)) == sorted(key(dets[i]) for i in want)
    shuffled = list(dets)
    rnd.shuffle(shuffled)
    assert D.nms(shuffled) == kept
