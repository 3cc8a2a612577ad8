"""Compare the compiled kernels with the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--images 40]

Micro-kernels are timed in-process against both modules; the end-to-end
detect loop runs once per backend in a subprocess, since the backend is
fixed at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from radicalocr._kernels import _pykernels as P

try:
    from radicalocr._kernels import _ckernels as C
except ImportError:
    C = None

DETECT_SNIPPET = r"""
import json, sys, time
from radicalocr import _kernels, detection as D, synthesis as S, toy
from radicalocr.layouts import default_layouts
n = int(sys.argv[1])
layouts = default_layouts()
rs = toy.toy_radical_set()
train = S.gen_img_set(rs, ["UD", "LR"], S.SynthesisConfig.identity(n=20, seed=0), layouts)
bank = D.build_templates(train)
test = S.gen_img_set(rs, ["UD", "LR", "UMD", "LMR"], S.SynthesisConfig(n=max(1, n // 4), seed=1), layouts)
t0 = time.perf_counter()
for ai in test:
    D.detect(ai.glyph, bank, layouts)
dt = time.perf_counter() - t0
print(json.dumps({"backend": _kernels.BACKEND, "images": len(test), "seconds": dt}))
"""


def _inputs(rng):
    img = np.where(rng.random((256, 256)) < 0.15, 0, 255).astype(np.uint8)
    img[:40] = 255
    bank = np.stack([P.normalize_patch(rng.integers(0, 256, (32, 32)).astype(np.uint8)) for _ in range(12)])
    t = np.radians(7.0)
    inv = np.array([[np.cos(t), -np.sin(t), 20.0], [np.sin(t), np.cos(t), -15.0]])
    boxes_a = np.sort(rng.random((50, 4)) * 100, axis=1)[:, [0, 1, 2, 3]]
    boxes_a[:, 2:] += 1
    boxes_b = boxes_a[::-1].copy()
    return img, bank, inv, boxes_a, boxes_b


def micro(repeat):
    rng = np.random.default_rng(0)
    img, bank, inv, ba, bb = _inputs(rng)
    cases = {
        "ink_bbox": lambda m: m.ink_bbox(img, 128),
        "resize_nearest 256->32": lambda m: m.resize_nearest(img, 32, 32),
        "warp_affine_nearest": lambda m: m.warp_affine_nearest(img, inv, 256, 256, 255),
        "patch_scores (12 templates)": lambda m: m.patch_scores(img, 128, bank, 32),
        "iou_matrix 50x50": lambda m: m.iou_matrix(ba, bb),
    }
    rows = []
    for name, fn in cases.items():
        number = 200
        py = min(timeit.repeat(lambda: fn(P), number=number, repeat=repeat)) / number
        c = min(timeit.repeat(lambda: fn(C), number=number, repeat=repeat)) / number if C else float("nan")
        rows.append((name, py, c))
    return rows


def detect_loop(images):
    out = {}
    for pure in ("1", "0"):
        env = dict(os.environ, RADICALOCR_PURE_PYTHON=pure)
        res = subprocess.run([sys.executable, "-c", DETECT_SNIPPET, str(images)],
                             capture_output=True, text=True, env=env, check=True)
        doc = json.loads(res.stdout)
        out[doc["backend"]] = doc
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--images", type=int, default=40)
    args = ap.parse_args(argv)

    print(f"{'kernel':30s} {'numpy us':>10s} {'cython us':>10s} {'speedup':>8s}")
    for name, py, c in micro(args.repeat):
        print(f"{name:30s} {py * 1e6:10.1f} {c * 1e6:10.1f} {py / c:8.2f}x")

    loop = detect_loop(args.images)
    print()
    for backend, doc in loop.items():
        per = doc["seconds"] / doc["images"] * 1e3
        print(f"detect loop [{backend:6s}] {doc['images']} images: {doc['seconds']:.3f}s ({per:.2f} ms/image)")
    if "cython" in loop and "python" in loop:
        print(f"detect loop speedup: {loop['python']['seconds'] / loop['cython']['seconds']:.2f}x")


if __name__ == "__main__":
    main()
