"""Small constructors shared by the tests."""
import numpy as np


def make_glyph(w, h, ink=()):
    from radicalocr.glyph import Glyph

    arr = np.full((h, w), 255, dtype=np.uint8)
    for x, y in ink:
        arr[y, x] = 0
    return Glyph(arr)


def make_grid(K, M, n_r, cells):
    """Flat row-major grid from ``{(row, col, anchor): (scores, x, y, w, h, obj)}``;
    unlisted anchors get zero objectness."""
    grid = np.zeros((K, K, M, n_r + 5))
    for (r, c, a), (scores, x, y, w, h, obj) in cells.items():
        grid[r, c, a, :n_r] = scores
        grid[r, c, a, n_r:] = (x, y, w, h, obj)
    return grid.ravel().tolist()


def slots_from(conf_lists, boxes=None):
    """LocationSlots from ``[[(label, conf), ...], ...]``."""
    from radicalocr.detection import LocationSlot, RadicalCandidate
    from radicalocr.glyph import Box

    out = []
    for i, cands in enumerate(conf_lists):
        box = boxes[i] if boxes else Box(i * 10, 0, i * 10 + 10, 10)
        out.append(LocationSlot(i, tuple(RadicalCandidate(lab, c, box) for lab, c in cands)))
    return tuple(out)


def result_from(conf_lists, structures, image_id="t"):
    from radicalocr.detection import DetectionResult, StructureCandidate

    return DetectionResult(
        image_id, slots_from(conf_lists), tuple(StructureCandidate(k, c) for k, c in structures)
    )
