# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot raster/scoring kernels (see _pykernels)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()


cdef bint _ink_bbox(const unsigned char[:, :] img, int threshold,
                    Py_ssize_t* bx1, Py_ssize_t* by1,
                    Py_ssize_t* bx2, Py_ssize_t* by2) noexcept nogil:
    # rows from the top and bottom until ink is hit, then per row only the
    # columns that could still widen the box
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t x, y, y1 = -1, y2 = -1, x1, x2
    for y in range(h):
        for x in range(w):
            if img[y, x] < threshold:
                y1 = y
                break
        if y1 >= 0:
            break
    if y1 < 0:
        return False
    y = h - 1
    while y2 < 0:
        for x in range(w):
            if img[y, x] < threshold:
                y2 = y
                break
        y -= 1
    x1, x2 = w, -1
    for y in range(y1, y2 + 1):
        for x in range(x1):
            if img[y, x] < threshold:
                x1 = x
                break
        x = w - 1
        while x > x2:
            if img[y, x] < threshold:
                x2 = x
                break
            x -= 1
    bx1[0] = x1
    by1[0] = y1
    bx2[0] = x2 + 1
    by2[0] = y2 + 1
    return True


def ink_bbox(const unsigned char[:, :] img, int threshold):
    cdef Py_ssize_t x1, y1, x2, y2
    if not _ink_bbox(img, threshold, &x1, &y1, &x2, &y2):
        return None
    return int(x1), int(y1), int(x2), int(y2)


def resize_nearest(const unsigned char[:, :] img, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out = np.empty((out_h, out_w), dtype=np.uint8)
    cdef unsigned char[:, :] o = out
    cdef Py_ssize_t x, y, sy
    cdef Py_ssize_t[:] sx = np.empty(out_w, dtype=np.intp)
    for x in range(out_w):
        sx[x] = ((2 * x + 1) * w) // (2 * out_w)
    for y in range(out_h):
        sy = ((2 * y + 1) * h) // (2 * out_h)
        for x in range(out_w):
            o[y, x] = img[sy, sx[x]]
    return out


def warp_affine_nearest(const unsigned char[:, :] img, inv, Py_ssize_t out_h,
                        Py_ssize_t out_w, int fill):
    cdef double[:, :] m = np.ascontiguousarray(inv, dtype=np.float64)
    cdef double a = m[0, 0], b = m[0, 1], c = m[0, 2]
    cdef double d = m[1, 0], e = m[1, 1], f = m[1, 2]
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out = np.empty((out_h, out_w), dtype=np.uint8)
    cdef unsigned char[:, :] o = out
    cdef Py_ssize_t x, y, sx, sy
    cdef double gx, gy
    with nogil:
        for y in range(out_h):
            gy = y + 0.5
            for x in range(out_w):
                gx = x + 0.5
                sx = <Py_ssize_t>floor(a * gx + b * gy + c)
                sy = <Py_ssize_t>floor(d * gx + e * gy + f)
                if 0 <= sx < w and 0 <= sy < h:
                    o[y, x] = img[sy, sx]
                else:
                    o[y, x] = <unsigned char>fill
    return out


def normalize_patch(const unsigned char[:, :] patch):
    cdef Py_ssize_t h = patch.shape[0], w = patch.shape[1], n = h * w
    out = np.empty(n, dtype=np.float64)
    cdef double[:] v = out
    cdef Py_ssize_t x, y, i
    cdef double mean = 0.0, ss = 0.0
    for y in range(h):
        for x in range(w):
            v[y * w + x] = 255.0 - patch[y, x]
            mean += v[y * w + x]
    mean /= n
    for i in range(n):
        v[i] -= mean
        ss += v[i] * v[i]
    ss = sqrt(ss)
    if ss < 1e-12:
        out[:] = 0.0
        return out
    for i in range(n):
        v[i] /= ss
    return out


def patch_scores(const unsigned char[:, :] crop, int threshold,
                 const double[:, :] bank, Py_ssize_t patch):
    cdef Py_ssize_t x1, y1, x2, y2
    if not _ink_bbox(crop, threshold, &x1, &y1, &x2, &y2):
        return None
    cdef Py_ssize_t bw = x2 - x1, bh = y2 - y1
    cdef Py_ssize_t n = patch * patch, t = bank.shape[0]
    cdef double[::1] v = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t x, y, i, k, sy
    cdef double mean = 0.0, ss = 0.0, acc
    for y in range(patch):
        sy = y1 + ((2 * y + 1) * bh) // (2 * patch)
        for x in range(patch):
            v[y * patch + x] = 255.0 - crop[sy, x1 + ((2 * x + 1) * bw) // (2 * patch)]
            mean += v[y * patch + x]
    mean /= n
    for i in range(n):
        v[i] -= mean
        ss += v[i] * v[i]
    ss = sqrt(ss)
    scores = np.zeros(t, dtype=np.float64)
    if ss < 1e-12:
        return scores
    cdef double[:] s = scores
    for k in range(t):
        acc = 0.0
        for i in range(n):
            acc += bank[k, i] * v[i]
        s[k] = acc / ss
    return scores


def iou_matrix(a, b):
    cdef double[:, :] A = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    cdef double[:, :] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], i, j
    out = np.zeros((na, nb), dtype=np.float64)
    cdef double[:, :] o = out
    cdef double iw, ih, inter, union
    for i in range(na):
        for j in range(nb):
            iw = min(A[i, 2], B[j, 2]) - max(A[i, 0], B[j, 0])
            ih = min(A[i, 3], B[j, 3]) - max(A[i, 1], B[j, 1])
            if iw <= 0 or ih <= 0:
                continue
            inter = iw * ih
            union = ((A[i, 2] - A[i, 0]) * (A[i, 3] - A[i, 1])
                     + (B[j, 2] - B[j, 0]) * (B[j, 3] - B[j, 1]) - inter)
            if union > 0:
                o[i, j] = inter / union
    return out
