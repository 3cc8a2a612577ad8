import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radicalocr import glyph as G
from radicalocr.errors import EmptyGlyph, InvalidParams, ValidationError
from tests.oracles import cell_iou

from tests.helpers import make_glyph

int_boxes = st.tuples(st.integers(0, 12), st.integers(0, 12), st.integers(1, 8), st.integers(1, 8)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3])
)


def test_iou_worked_example():
    a, b = G.Box(0, 0, 2, 2), G.Box(1, 1, 3, 3)
    assert G.iou(a, b) == pytest.approx(1 / 7, abs=1e-12)
    assert cell_iou((0, 0, 2, 2), (1, 1, 3, 3)) == Fraction(1, 7)


@settings(max_examples=300, deadline=None)
@given(int_boxes, int_boxes)
def test_iou_matches_cell_count(a, b):
    assert G.iou(G.Box(*a), G.Box(*b)) == pytest.approx(float(cell_iou(a, b)), abs=1e-12)


def test_degenerate_box_rejected():
    with pytest.raises(InvalidParams):
        G.Box(3, 0, 3, 5)


def test_glyph_is_read_only():
    g = make_glyph(4, 3, [(1, 1)])
    with pytest.raises(ValueError):
        g.pixels[0, 0] = 0
    assert g.size == (4, 3)


def test_ink_bbox_and_empty():
    g = make_glyph(10, 8, [(2, 3), (6, 5)])
    assert G.ink_bounding_box(g) == G.Box(2, 3, 7, 6)
    with pytest.raises(EmptyGlyph):
        G.ink_bounding_box(G.blank(5, 5))


def test_paste_darker_wins_and_bounds():
    canvas = G.blank(6, 6)
    a = G.Glyph(np.array([[100, 255], [255, 255]], np.uint8))
    b = G.Glyph(np.array([[200, 0], [255, 255]], np.uint8))
    out = G.paste(G.paste(canvas, a, 1, 1), b, 1, 1)
    assert out.pixels[1, 1] == 100 and out.pixels[1, 2] == 0
    with pytest.raises(InvalidParams):
        G.paste(canvas, a, 5, 5)


def test_symmetric_pad_keeps_ink_centre():
    g = make_glyph(9, 7, [(1, 2), (5, 4)])
    c0 = G.ink_bounding_box(g).center
    p = 3
    c1 = G.ink_bounding_box(G.pad(g, p)).center
    assert c1 == (c0[0] + p, c0[1] + p)
    assert G.pad(g, p).size == (9 + 2 * p, 7 + 2 * p)


def test_rotate_zero_and_full_turn_are_identity():
    g = make_glyph(11, 9, [(2, 2), (7, 5)])
    assert G.rotate(g, 0) == g
    assert G.rotate(g, 360) == g


def test_rotate_quarter_turn_matches_rot90():
    rng = np.random.default_rng(0)
    arr = np.where(rng.random((9, 9)) < 0.3, 0, 255).astype(np.uint8)
    out = G.rotate(G.Glyph(arr), 90)
    # counter-clockwise as displayed
    assert np.array_equal(out.pixels, np.rot90(arr, 1))


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.integers(0, 20), st.integers(0, 20))
def test_rotation_moves_points_within_bound(deg, x, y):
    # a dot at distance r from the centre moves by at most 2 r sin(|deg|/2)
    # plus one pixel of nearest-neighbour rounding in each axis
    size = 41
    arr = np.full((size, size), 255, np.uint8)
    px, py = 10 + x, 10 + y
    arr[py, px] = 0
    out = G.rotate(G.Glyph(arr), deg)
    ys, xs = np.nonzero(out.pixels < 128)
    c = size / 2
    r = np.hypot(px + 0.5 - c, py + 0.5 - c)
    bound = 2 * r * abs(np.sin(np.radians(deg) / 2)) + np.sqrt(2) + 1e-9
    for qx, qy in zip(xs, ys):
        assert np.hypot(qx - px, qy - py) <= bound


def test_scale_sizes():
    g = make_glyph(10, 6, [(3, 3)])
    assert G.scale(g, 1.5).size == (15, 9)
    assert G.scale(g, 0.5, 2).size == (5, 12)
    with pytest.raises(InvalidParams):
        G.scale(g, 0)


def test_shear_zero_is_identity_and_singular_rejected():
    g = make_glyph(5, 5, [(2, 2)])
    assert G.shear(g, 0.0) is g
    with pytest.raises(InvalidParams):
        G.shear(g, 1.0, 1.0)


def test_annotated_invariants():
    g = make_glyph(10, 10, [(2, 2)])
    with pytest.raises(ValidationError):
        G.AnnotatedImage(g, "x", ("a",), (G.Box(0, 0, 2, 2),), "UD")
    with pytest.raises(ValidationError):
        G.AnnotatedImage(g, "x", ("a",), (G.Box(0, 0, 20, 2),), "Single")
    with pytest.raises(ValidationError):
        G.AnnotatedImage(g, "x", ("a", "b"), (G.Box(0, 0, 2, 2),), "UD")


def test_png_sidecar_round_trip(tmp_path):
    g = make_glyph(12, 10, [(1, 1), (8, 7)])
    ai = G.AnnotatedImage(g, "chase", ("swine", "toe"), (G.Box(1, 1, 2, 2), G.Box(8, 7, 9, 8)), "UD", "img0")
    rec = G.write_annotated(ai, tmp_path)
    assert json.loads((tmp_path / "img0.json").read_text()) == rec
    back = G.read_annotated(tmp_path / "img0.json")
    assert back == ai
    assert back.glyph == g
