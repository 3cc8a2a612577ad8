"""NumPy implementations of the raster and scoring kernels.

These are the reference versions; ``_ckernels`` must agree with them
bit-for-bit on integer outputs and to ~1e-12 on float outputs.
"""
import numpy as np


def ink_bbox(img, threshold):
    """Half-open (x1, y1, x2, y2) of pixels darker than ``threshold``, or None."""
    mask = img < threshold
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1


def _nearest_index(out_len, src_len):
    # centre-aligned nearest neighbour, exact in integers
    d = np.arange(out_len, dtype=np.int64)
    return ((2 * d + 1) * src_len) // (2 * out_len)


def resize_nearest(img, out_h, out_w):
    ys = _nearest_index(out_h, img.shape[0])
    xs = _nearest_index(out_w, img.shape[1])
    return np.ascontiguousarray(img[ys[:, None], xs[None, :]])


def warp_affine_nearest(img, inv, out_h, out_w, fill):
    """Sample ``img`` at ``inv @ (x + .5, y + .5, 1)`` for every output pixel."""
    h, w = img.shape
    inv = np.asarray(inv, dtype=np.float64)
    px = np.arange(out_w, dtype=np.float64) + 0.5
    py = np.arange(out_h, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(px, py)
    sx = np.floor(inv[0, 0] * gx + inv[0, 1] * gy + inv[0, 2]).astype(np.int64)
    sy = np.floor(inv[1, 0] * gx + inv[1, 1] * gy + inv[1, 2]).astype(np.int64)
    inside = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    out = np.full((out_h, out_w), fill, dtype=np.uint8)
    out[inside] = img[sy[inside], sx[inside]]
    return out


def normalize_patch(patch):
    """Zero-mean, unit-norm ink vector of an 8-bit patch (ink = 255 - value)."""
    v = 255.0 - patch.astype(np.float64).ravel()
    v -= v.mean()
    norm = np.sqrt(np.dot(v, v))
    if norm < 1e-12:
        return np.zeros_like(v)
    return v / norm


def patch_scores(crop, threshold, bank, patch):
    """NCC of the ink-box of ``crop`` (resized to patch x patch) against ``bank``.

    ``bank`` rows are normalised templates. Returns raw correlations in
    [-1, 1], or None when the crop has no ink.
    """
    box = ink_bbox(crop, threshold)
    if box is None:
        return None
    x1, y1, x2, y2 = box
    small = resize_nearest(crop[y1:y2, x1:x2], patch, patch)
    return bank @ normalize_patch(small)


def iou_matrix(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ix1 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy1 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix2 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy2 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix2 - ix1, 0, None) * np.clip(iy2 - iy1, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / union, 0.0)
    return out
