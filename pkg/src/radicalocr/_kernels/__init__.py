"""Hot kernels with a compiled (Cython) backend and a NumPy fallback.

The compiled module is used when it was built and imports cleanly; set
``RADICALOCR_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
active one.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("RADICALOCR_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

ink_bbox = _impl.ink_bbox
resize_nearest = _impl.resize_nearest
warp_affine_nearest = _impl.warp_affine_nearest
normalize_patch = _impl.normalize_patch
patch_scores = _impl.patch_scores
iou_matrix = _impl.iou_matrix

__all__ = [
    "BACKEND",
    "ink_bbox",
    "resize_nearest",
    "warp_affine_nearest",
    "normalize_patch",
    "patch_scores",
    "iou_matrix",
]
