import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from radicalocr._kernels import _pykernels as P

try:
    from radicalocr._kernels import _ckernels as C
except ImportError:  # pragma: no cover - extension not built
    C = None

needs_c = pytest.mark.skipif(C is None, reason="compiled kernels not built")

images = st.integers(1, 24).flatmap(
    lambda h: st.integers(1, 24).flatmap(
        lambda w: arrays(np.uint8, (h, w), elements=st.sampled_from([0, 60, 127, 128, 200, 255]))
    )
)


def test_pure_python_fallback_is_selectable():
    import subprocess
    import sys

    code = "from radicalocr import _kernels; print(_kernels.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True,
        env={"RADICALOCR_PURE_PYTHON": "1", "PATH": ""}, check=True,
    )
    assert out.stdout.strip() == "python"


def test_ink_bbox_reference():
    img = np.full((5, 7), 255, np.uint8)
    assert P.ink_bbox(img, 128) is None
    img[1, 2] = img[3, 5] = 0
    assert P.ink_bbox(img, 128) == (2, 1, 6, 4)


def test_resize_identity_and_doubling():
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    assert np.array_equal(P.resize_nearest(img, 3, 4), img)
    assert np.array_equal(P.resize_nearest(img, 6, 8), np.repeat(np.repeat(img, 2, 0), 2, 1))
    assert np.array_equal(P.resize_nearest(P.resize_nearest(img, 6, 8), 3, 4), img)


@needs_c
@settings(max_examples=300, deadline=None)
@given(images, st.integers(1, 255))
def test_ink_bbox_agree(img, thr):
    assert C.ink_bbox(img, thr) == P.ink_bbox(img, thr)


@needs_c
@settings(max_examples=300, deadline=None)
@given(images, st.integers(1, 40), st.integers(1, 40))
def test_resize_agree(img, h, w):
    assert np.array_equal(C.resize_nearest(img, h, w), P.resize_nearest(img, h, w))


@needs_c
@settings(max_examples=300, deadline=None)
@given(images, st.floats(-180, 180), st.floats(-0.4, 0.4), st.integers(1, 30), st.integers(1, 30))
def test_warp_agree(img, deg, sh, oh, ow):
    t = np.radians(deg)
    inv = np.array([[np.cos(t), -np.sin(t) + sh, 3.25], [np.sin(t), np.cos(t), -1.5]])
    assert np.array_equal(
        C.warp_affine_nearest(img, inv, oh, ow, 255), P.warp_affine_nearest(img, inv, oh, ow, 255)
    )


@needs_c
@settings(max_examples=300, deadline=None)
@given(images)
def test_normalize_agree(img):
    np.testing.assert_allclose(C.normalize_patch(img), P.normalize_patch(img), atol=1e-12)


@needs_c
@settings(max_examples=200, deadline=None)
@given(images, st.integers(0, 2**31 - 1))
def test_patch_scores_agree(img, seed):
    rng = np.random.default_rng(seed)
    bank = np.stack([P.normalize_patch(rng.integers(0, 256, (8, 8)).astype(np.uint8)) for _ in range(4)])
    a, b = C.patch_scores(img, 128, bank, 8), P.patch_scores(img, 128, bank, 8)
    if b is None:
        assert a is None
    else:
        np.testing.assert_allclose(a, b, atol=1e-12)


boxes = st.tuples(st.floats(0, 50), st.floats(0, 50), st.floats(0.5, 30), st.floats(0.5, 30)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3])
)


@needs_c
@settings(max_examples=300, deadline=None)
@given(st.lists(boxes, min_size=1, max_size=6), st.lists(boxes, min_size=1, max_size=6))
def test_iou_matrix_agree(a, b):
    a, b = np.array(a), np.array(b)
    np.testing.assert_allclose(C.iou_matrix(a, b), P.iou_matrix(a, b), atol=1e-12)
