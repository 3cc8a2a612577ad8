"""Splicing-based synthetic character generation.

For each requested structure, ``n`` images are produced by drawing radical
exemplars, augmenting them, fitting each into its layout slot and pasting
onto a blank canvas. The emitted radical boxes are the ink boxes of the
pasted radicals, so labels are exact by construction.

Every image gets its own RNG stream seeded from ``(seed, structure, j)``;
output is independent of worker count and generation order.
"""
from __future__ import annotations

import json
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import glyph as G
from .errors import EmptyGlyph, EmptySet, InvalidParams, SlotMismatch
from .layouts import get_structure

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
AUGMENT_OPS = ("zoom_in", "zoom_out", "rotate", "distort", "pad")


@dataclass(frozen=True)
class SynthesisConfig:
    n: int = 3600
    scale_range: tuple[float, float] = (0.8, 1.2)
    rotation: float = 10.0
    shear: float = 0.15
    pad_range: tuple[int, int] = (0, 8)
    op_prob: float = 0.5
    slot_margin: float = 0.04
    seed: int = 0
    dictionary_valid: bool = False

    def __post_init__(self):
        lo, hi = self.scale_range
        if self.n < 0:
            raise InvalidParams("n must be >= 0")
        if not (0 < lo <= 1.0 <= hi):
            raise InvalidParams(f"scale_range must satisfy 0 < lo <= 1 <= hi, got {self.scale_range}")
        if self.rotation < 0 or self.shear < 0:
            raise InvalidParams("rotation and shear bounds must be >= 0")
        if not (0 <= self.pad_range[0] <= self.pad_range[1]):
            raise InvalidParams(f"bad pad_range {self.pad_range}")
        if not (0.0 <= self.op_prob <= 1.0):
            raise InvalidParams("op_prob must be in [0, 1]")
        if not (0.0 <= self.slot_margin < 0.5):
            raise InvalidParams("slot_margin must be in [0, 0.5)")

    @classmethod
    def identity(cls, **kw):
        base = dict(scale_range=(1.0, 1.0), rotation=0.0, shear=0.0, pad_range=(0, 0))
        base.update(kw)
        return cls(**base)

    @property
    def is_identity(self):
        return (
            self.scale_range == (1.0, 1.0) and self.rotation == 0
            and self.shear == 0 and self.pad_range == (0, 0)
        )


class RadicalImageSet(dict):
    """Mapping radical id -> list of exemplar glyphs."""

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        for rid, exemplars in self.items():
            if not exemplars:
                raise EmptySet(f"radical {rid!r} has no exemplars")


def load_radical_set(directory) -> RadicalImageSet:
    """Load ``DIR/<radical>/*.png`` and/or ``DIR/<radical>.png``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise EmptySet(f"radical directory {directory} does not exist")
    found = {}
    for p in sorted(directory.iterdir()):
        if p.is_dir():
            files = sorted(p.glob("*.png"))
            if files:
                found.setdefault(p.name, []).extend(G.load_png(f) for f in files)
        elif p.suffix.lower() == ".png":
            found.setdefault(p.stem, []).append(G.load_png(p))
    if not found:
        raise EmptySet(f"no radical images under {directory}")
    return RadicalImageSet(found)


def save_radical_set(set_r, directory):
    directory = Path(directory)
    for rid, exemplars in set_r.items():
        sub = directory / rid
        sub.mkdir(parents=True, exist_ok=True)
        for i, g in enumerate(exemplars):
            G.save_png(g, sub / f"{i:03d}.png")


def image_rng(seed, structure, j):
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(structure.encode()), int(j)]))


def get_radicals(set_r, num, rng):
    """Draw ``num`` (radical id, exemplar) pairs, uniform over ids then exemplars."""
    if not set_r:
        raise EmptySet("radical image set is empty")
    if num < 1:
        raise InvalidParams("num must be >= 1")
    ids = list(set_r)
    out = []
    for _ in range(num):
        rid = ids[int(rng.integers(len(ids)))]
        exemplars = set_r[rid]
        out.append((rid, exemplars[int(rng.integers(len(exemplars)))]))
    return out


def _augment_one(g, config, rng):
    chosen = rng.random(len(AUGMENT_OPS)) < config.op_prob
    lo, hi = config.scale_range
    zin = rng.uniform(1.0, hi) if hi > 1.0 else 1.0
    zout = rng.uniform(lo, 1.0) if lo < 1.0 else 1.0
    angle = rng.uniform(-config.rotation, config.rotation) if config.rotation else 0.0
    sh = rng.uniform(-config.shear, config.shear) if config.shear else 0.0
    p0, p1 = config.pad_range
    pads = rng.integers(p0, p1 + 1, size=4) if p1 > 0 else np.zeros(4, dtype=int)

    out = g
    if chosen[0] and zin != 1.0:
        out = G.scale(out, zin)
    if chosen[1] and zout != 1.0:
        out = G.scale(out, zout)
    if chosen[2] and angle != 0.0:
        out = G.rotate(out, angle)
    if chosen[3] and sh != 0.0:
        out = G.shear(out, sh)
    if chosen[4] and pads.any():
        out = G.pad(out, *(int(v) for v in pads))
    return out


def augment_img(radicals, config, rng):
    """Apply a random subset of zoom-in/zoom-out/rotate/distort/pad to each glyph."""
    return [_augment_one(g, config, rng) for g in radicals]


def fit_to_slot(g, slot, margin):
    """Scale ``g`` (aspect kept) into the pixel ``slot`` minus ``margin``; return
    the fitted glyph and its top-left paste position."""
    x1, y1, x2, y2 = slot
    sw, sh = x2 - x1, y2 - y1
    mx, my = int(round(sw * margin)), int(round(sh * margin))
    aw, ah = max(1, sw - 2 * mx), max(1, sh - 2 * my)
    f = min(aw / g.width, ah / g.height)
    w = max(1, min(aw, int(g.width * f)))
    h = max(1, min(ah, int(g.height * f)))
    fitted = G.resize(g, w, h)
    return fitted, (x1 + (sw - w) // 2, y1 + (sh - h) // 2)


def generate_img(radicals, layout, character_label=None, slot_margin=0.04, image_id=""):
    """Splice ``[(radical_id, glyph), ...]`` into ``layout`` slots."""
    if len(radicals) != layout.num_slots:
        raise SlotMismatch(f"{layout.kind} has {layout.num_slots} slots, got {len(radicals)} radicals")
    width, height = layout.canvas_size
    canvas = G.blank(width, height)
    boxes, fitted_glyphs, positions = [], [], []
    for (rid, g), slot in zip(radicals, layout.pixel_slots()):
        fitted, (px, py) = fit_to_slot(g, slot, slot_margin)
        try:
            ink = G.ink_bounding_box(fitted)
        except EmptyGlyph:
            raise EmptyGlyph(f"radical {rid!r} has no ink after fitting into {layout.kind}") from None
        canvas = G.paste(canvas, fitted, px, py)
        boxes.append(ink.translate(px, py))
        fitted_glyphs.append(fitted)
        positions.append((px, py))
    ids = tuple(rid for rid, _ in radicals)
    label = character_label or f"SYN:{layout.kind}:{','.join(ids)}"
    return G.AnnotatedImage(
        canvas, label, ids, tuple(boxes), layout.kind, image_id,
        meta={"fitted": fitted_glyphs, "positions": positions},
    )


def _augment_with_fallback(drawn, config, rng, layout):
    augmented = augment_img([g for _, g in drawn], config, rng)
    out = []
    for (rid, orig), aug, slot in zip(drawn, augmented, layout.pixel_slots()):
        # thin strokes can vanish under heavy downsampling; keep the exemplar then
        fitted, _ = fit_to_slot(aug, slot, config.slot_margin)
        if not G.has_ink(fitted):
            aug = orig
        out.append((rid, aug))
    return out


def synthesize_one(set_r, layout, config, j, dictionary=None):
    rng = image_rng(config.seed, layout.kind, j)
    image_id = f"{layout.kind}_{j:05d}"
    label = None
    if config.dictionary_valid:
        entry = _pick_entry(dictionary, layout, set_r, rng)
        drawn = [(r, set_r[r][int(rng.integers(len(set_r[r])))]) for r in entry.radicals]
        label = entry.character
    else:
        drawn = get_radicals(set_r, layout.num_slots, rng)
    drawn = _augment_with_fallback(drawn, config, rng, layout)
    return generate_img(drawn, layout, label, config.slot_margin, image_id)


def render_character(entry, set_r, layout, config, rng, image_id=""):
    """Synthesise one image of a real dictionary character."""
    if entry.structure != layout.kind:
        raise SlotMismatch(f"entry {entry.character} is {entry.structure}, layout is {layout.kind}")
    missing = [r for r in entry.radicals if r not in set_r]
    if missing:
        raise EmptySet(f"no exemplars for radicals {missing}")
    drawn = [(r, set_r[r][int(rng.integers(len(set_r[r])))]) for r in entry.radicals]
    drawn = _augment_with_fallback(drawn, config, rng, layout)
    return generate_img(drawn, layout, entry.character, config.slot_margin, image_id)


def _pick_entry(dictionary, layout, set_r, rng):
    if dictionary is None:
        raise InvalidParams("dictionary_valid requires a dictionary")
    pool = [
        e for e in dictionary.entries
        if e.structure == layout.kind and all(r in set_r for r in e.radicals)
    ]
    if not pool:
        raise EmptySet(f"no dictionary entries of structure {layout.kind} drawable from the radical set")
    return pool[int(rng.integers(len(pool)))]


def _task(args):
    set_r, layout, config, j, dictionary = args
    return synthesize_one(set_r, layout, config, j, dictionary)


def gen_img_set(set_r, set_s, config, layouts, dictionary=None, workers=1):
    """Generate ``config.n`` images for each structure in ``set_s``, in
    canonical ``(structure, j)`` order."""
    if "Single" in set_s:
        raise InvalidParams("synthesis structures must exclude Single")
    if not set_r:
        raise EmptySet("radical image set is empty")
    chosen = []
    for kind in set_s:
        get_structure(kind, layouts)
        chosen.append(layouts[kind])
    tasks = [(set_r, lay, config, j, dictionary) for lay in chosen for j in range(config.n)]
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [_task(t) for t in tasks]


def write_set(images, out_dir, config=None, extra=None):
    """Write PNG + JSON sidecars and ``manifest.json``; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = [G.write_annotated(ai, out_dir) for ai in images]
    manifest = {"schema_version": SCHEMA_VERSION, "count": len(records), "records": records}
    if config is not None:
        manifest["config"] = asdict(config)
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def read_manifest(path):
    """Load the images listed in a manifest (``path`` may be the file or its dir)."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    doc = json.loads(path.read_text(encoding="utf-8"))
    return [
        G.annotated_from_json(rec, G.load_png(path.parent / rec["image"])) for rec in doc["records"]
    ]
