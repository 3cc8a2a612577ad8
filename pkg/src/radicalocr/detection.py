"""Radical and structure candidates for a character image.

Two sources fill the same :class:`DetectionResult` contract:

* a non-neural baseline: centroid templates per radical scored by normalised
  cross-correlation inside each slot of every layout hypothesis;
* ingestion of external predictions, either as explicit ranked slots or as a
  raw ``K x K x M x (n_r + 5)`` detector grid decoded with objectness
  thresholding and class-wise non-maximum suppression.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from . import glyph as G
from .errors import EmptyTraining, ParseError, RangeError

DEFAULT_PATCH = 32


@dataclass(frozen=True)
class RadicalCandidate:
    label: str
    conf: float
    box: G.Box

    def __post_init__(self):
        if not (0.0 <= self.conf <= 1.0):
            raise RangeError(f"candidate confidence {self.conf} outside [0, 1]")


@dataclass(frozen=True)
class LocationSlot:
    index: int
    candidates: tuple[RadicalCandidate, ...]

    def __post_init__(self):
        cands = tuple(sorted(self.candidates, key=lambda c: -c.conf))
        if not cands:
            raise ParseError(f"slot {self.index} has no candidates")
        object.__setattr__(self, "candidates", cands)

    @property
    def box(self):
        return self.candidates[0].box


@dataclass(frozen=True)
class StructureCandidate:
    label: str
    conf: float

    def __post_init__(self):
        if not (0.0 <= self.conf <= 1.0):
            raise RangeError(f"structure confidence {self.conf} outside [0, 1]")


@dataclass(frozen=True)
class DetectionResult:
    """Ranked candidates for one image.

    ``slots`` belong to the top structure hypothesis. ``hypotheses`` optionally
    carries per-structure slot lists (already in that layout's slot order);
    the reasoner prefers them over ``slots`` when present.
    """

    image_id: str
    slots: tuple[LocationSlot, ...]
    structures: tuple[StructureCandidate, ...]
    hypotheses: dict = field(default_factory=dict)
    image_size: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.structures:
            raise ParseError(f"{self.image_id}: no structure candidates")
        object.__setattr__(self, "slots", tuple(self.slots))
        object.__setattr__(
            self, "structures", tuple(sorted(self.structures, key=lambda s: -s.conf))
        )

    def slots_for(self, structure):
        return self.hypotheses.get(structure, self.slots)

    def to_json(self):
        doc = {
            "image_id": self.image_id,
            "slots": [_slot_json(s) for s in self.slots],
            "structures": [{"label": s.label, "conf": s.conf} for s in self.structures],
        }
        if self.hypotheses:
            doc["hypotheses"] = {k: [_slot_json(s) for s in v] for k, v in self.hypotheses.items()}
        if self.image_size:
            doc["image_size"] = list(self.image_size)
        return doc


def _slot_json(slot):
    return [{"label": c.label, "conf": c.conf, "box": G._box_json(c.box)} for c in slot.candidates]


# -- template bank ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TemplateBank:
    labels: tuple[str, ...]
    centroids: np.ndarray  # (T, patch, patch) float mean of 8-bit crops
    counts: tuple[int, ...]
    patch: int = DEFAULT_PATCH
    threshold: int = G.INK_THRESHOLD
    normalized: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = 255.0 - self.centroids.reshape(len(self.labels), -1).astype(np.float64)
        v = v - v.mean(axis=1, keepdims=True)
        norms = np.sqrt((v * v).sum(axis=1, keepdims=True))
        v = np.divide(v, norms, out=np.zeros_like(v), where=norms > 1e-12)
        object.__setattr__(self, "normalized", np.ascontiguousarray(v))

    def __len__(self):
        return len(self.labels)

    def save(self, path):
        np.savez_compressed(
            path, labels=np.array(self.labels), centroids=self.centroids,
            counts=np.array(self.counts), patch=self.patch, threshold=self.threshold,
        )

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as z:
            return cls(
                tuple(str(s) for s in z["labels"]), z["centroids"].astype(np.float64),
                tuple(int(c) for c in z["counts"]), int(z["patch"]), int(z["threshold"]),
            )


def build_templates(training, patch=DEFAULT_PATCH, threshold=G.INK_THRESHOLD) -> TemplateBank:
    """Per radical category, the mean of its annotated crops resized to patch x patch."""
    sums, counts = {}, {}
    for ai in training:
        for label, box in zip(ai.radical_labels, ai.radical_boxes):
            crop = G.crop(ai.glyph, box)
            small = K.resize_nearest(crop.pixels, patch, patch).astype(np.float64)
            if label in sums:
                sums[label] += small
                counts[label] += 1
            else:
                sums[label] = small
                counts[label] = 1
    if not sums:
        raise EmptyTraining("no radical crops in the training set")
    labels = tuple(sums)
    centroids = np.stack([sums[k] / counts[k] for k in labels])
    return TemplateBank(labels, centroids, tuple(counts[k] for k in labels), patch, threshold)


# -- baseline detector -----------------------------------------------------

def ncc_to_conf(ncc):
    return np.clip((np.asarray(ncc, dtype=np.float64) + 1.0) / 2.0, 0.0, 1.0)


def _softmax(x, temperature):
    z = np.asarray(x, dtype=np.float64) / temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def detect(image, bank, layouts, top_j=5, temperature=0.05, slot_penalty=0.02,
           top_layouts=5, image_id=""):
    """Score every layout hypothesis against ``image`` with the template bank.

    Each slot's crop is reduced to its ink box, resized to the bank's patch
    and correlated with every template; confidence is ``(ncc + 1) / 2``.
    A layout scores the mean of its slots' best confidences minus
    ``slot_penalty`` per slot beyond the first (so a single radical is not
    explained equally well by an overlay of two copies of itself); structure
    confidences are a softmax of layout scores.
    """
    if len(bank) == 0:
        raise EmptyTraining("template bank is empty")
    pix = image.pixels
    h, w = pix.shape
    cache = {}
    kinds, layout_scores, layout_slots = [], [], {}
    for kind, lay in layouts.items():
        slots, bests = [], []
        for i, rect in enumerate(lay.pixel_slots((w, h))):
            if rect not in cache:
                x1, y1, x2, y2 = rect
                sub = pix[y1:y2, x1:x2]
                raw = K.patch_scores(sub, bank.threshold, bank.normalized, bank.patch)
                if raw is None:
                    cache[rect] = (np.zeros(len(bank)), G.Box(*rect), 0.0)
                else:
                    conf = ncc_to_conf(raw)
                    bx = K.ink_bbox(sub, bank.threshold)
                    box = G.Box(bx[0] + x1, bx[1] + y1, bx[2] + x1, bx[3] + y1)
                    cache[rect] = (conf, box, float(conf.max()))
            conf, box, best = cache[rect]
            bests.append(best)
            order = np.argsort(-conf, kind="stable")[:top_j]
            slots.append(LocationSlot(i, tuple(
                RadicalCandidate(bank.labels[k], float(conf[k]), box) for k in order
            )))
        kinds.append(kind)
        layout_scores.append(float(np.mean(bests)) - slot_penalty * (len(bests) - 1))
        layout_slots[kind] = tuple(slots)
    if all(s == layout_scores[0] for s in layout_scores) or not any(
        c[2] > 0 for c in cache.values()
    ):
        probs = np.full(len(kinds), 1.0 / len(kinds))
    else:
        probs = _softmax(layout_scores, temperature)
    ranked = sorted(range(len(kinds)), key=lambda i: (-probs[i], i))
    structures = tuple(StructureCandidate(kinds[i], float(probs[i])) for i in ranked)
    hypotheses = {kinds[i]: layout_slots[kinds[i]] for i in ranked[:top_layouts]}
    return DetectionResult(
        image_id, layout_slots[kinds[ranked[0]]], structures, hypotheses, (w, h)
    )


# -- ingestion -------------------------------------------------------------

def _check_conf(v, what):
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ParseError(f"{what}: confidence {v!r} is not a number") from None
    if not (0.0 <= v <= 1.0) or math.isnan(v):
        raise RangeError(f"{what}: confidence {v} outside [0, 1]")
    return v


def _parse_slots(raw, image_id):
    slots = []
    for i, cands in enumerate(raw):
        parsed = []
        for c in cands:
            conf = _check_conf(c["conf"], f"{image_id} slot {i}")
            try:
                box = G.Box.from_list(c["box"])
            except (ValueError, TypeError) as exc:
                raise ParseError(f"{image_id} slot {i}: bad box {c.get('box')!r}: {exc}") from None
            parsed.append(RadicalCandidate(str(c["label"]), conf, box))
        slots.append(LocationSlot(i, tuple(parsed)))
    return tuple(slots)


def _parse_structures(raw, image_id):
    return tuple(
        StructureCandidate(str(s["label"]), _check_conf(s["conf"], f"{image_id} structure"))
        for s in raw
    )


def prediction_from_json(doc, obj_threshold=0.5, nms_iou=0.5, top_j=5):
    try:
        image_id = str(doc["image_id"])
        size = tuple(doc["image_size"]) if doc.get("image_size") else None
        if "grid" in doc:
            return decode_grid(doc, obj_threshold, nms_iou, top_j)
        hyps = {k: _parse_slots(v, image_id) for k, v in doc.get("hypotheses", {}).items()}
        return DetectionResult(
            image_id, _parse_slots(doc["slots"], image_id),
            _parse_structures(doc["structures"], image_id), hyps, size,
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed prediction record: {exc!r}") from None


def ingest_predictions(path, obj_threshold=0.5, nms_iou=0.5, top_j=5):
    """Read a JSON-lines prediction file into ``DetectionResult`` objects."""
    out = []
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), path, lineno) from None
            try:
                out.append(prediction_from_json(doc, obj_threshold, nms_iou, top_j))
            except ParseError as exc:
                raise ParseError(str(exc), path, lineno) from None
    return out


def write_predictions(results, path):
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


@dataclass(frozen=True)
class GridDetection:
    cls: int
    objectness: float
    box: tuple[float, float, float, float]
    scores: tuple[float, ...]


def grid_detections(grid, K_, M, n_r, image_size=(256, 256), obj_threshold=0.5):
    """Decode a flat row-major ``K x K x M x (n_r + 5)`` grid.

    Per anchor: ``n_r`` class scores, then ``x, y`` (centre offset inside the
    cell), ``w, h`` (in cell units) and objectness.
    """
    arr = np.asarray(grid, dtype=np.float64)
    stride = n_r + 5
    if arr.size != K_ * K_ * M * stride:
        raise ParseError(f"grid has {arr.size} values, expected {K_}*{K_}*{M}*{stride}")
    arr = arr.reshape(K_, K_, M, stride)
    W, H = image_size
    cw, ch = W / K_, H / K_
    dets = []
    for r in range(K_):
        for c in range(K_):
            for a in range(M):
                cell = arr[r, c, a]
                obj = float(cell[-1])
                if not (0.0 <= obj <= 1.0):
                    raise RangeError(f"objectness {obj} outside [0, 1] at cell ({r},{c},{a})")
                if obj < obj_threshold:
                    continue
                scores = cell[:n_r]
                if np.any(scores < 0) or np.any(scores > 1):
                    raise RangeError(f"class score outside [0, 1] at cell ({r},{c},{a})")
                x, y, bw, bh = cell[n_r:n_r + 4]
                cx, cy = (c + x) * cw, (r + y) * ch
                box = (
                    max(0.0, cx - bw * cw / 2), max(0.0, cy - bh * ch / 2),
                    min(float(W), cx + bw * cw / 2), min(float(H), cy + bh * ch / 2),
                )
                if not (box[0] < box[2] and box[1] < box[3]):
                    continue
                dets.append(GridDetection(int(np.argmax(scores)), obj, box, tuple(float(s) for s in scores)))
    return dets


def nms(dets, iou_threshold=0.5):
    """Class-wise greedy NMS; a detection is suppressed by a kept, higher-ranked
    detection of the same class with IoU above ``iou_threshold``."""
    order = sorted(dets, key=lambda d: (-d.objectness, d.cls, d.box, d.scores))
    kept = []
    for d in order:
        same = [k for k in kept if k.cls == d.cls]
        if same:
            ious = K.iou_matrix(np.array([d.box]), np.array([k.box for k in same]))[0]
            if np.any(ious > iou_threshold):
                continue
        kept.append(d)
    return kept


def decode_grid(doc, obj_threshold=0.5, nms_iou=0.5, top_j=5):
    image_id = str(doc["image_id"])
    K_, M, n_r = int(doc["K"]), int(doc["M"]), int(doc["n_r"])
    size = tuple(doc.get("image_size") or (256, 256))
    labels = doc.get("labels") or [f"r{i}" for i in range(n_r)]
    if len(labels) != n_r:
        raise ParseError(f"{image_id}: {len(labels)} labels for n_r={n_r}")
    kept = nms(grid_detections(doc["grid"], K_, M, n_r, size, obj_threshold), nms_iou)
    kept.sort(key=lambda d: (d.box[1], d.box[0], -d.objectness))
    slots = []
    for i, d in enumerate(kept):
        order = sorted(range(n_r), key=lambda k: (-d.scores[k], k))[:top_j]
        box = G.Box(*d.box)
        slots.append(LocationSlot(i, tuple(RadicalCandidate(labels[k], d.scores[k], box) for k in order)))
    structures = _parse_structures(doc.get("structures") or [], image_id)
    return DetectionResult(image_id, tuple(slots), structures, {}, size)
