"""Raster glyphs, boxes, annotated images and their file formats.

Coordinates: origin top-left, x to the right, y downward. Boxes are
half-open, ``[x1, x2) x [y1, y2)``, so ``(x2 - x1) * (y2 - y1)`` is the exact
pixel area. Pixels are 8-bit grayscale with dark ink on a white (255)
background.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import _kernels as K
from .errors import EmptyGlyph, InvalidParams, ParseError, ValidationError

BACKGROUND = 255
INK_THRESHOLD = 128


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidParams(f"degenerate box {self.as_list()}")

    @classmethod
    def from_list(cls, seq):
        x1, y1, x2, y2 = seq
        return cls(x1, y1, x2, y2)

    def as_list(self):
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def height(self):
        return self.y2 - self.y1

    @property
    def area(self):
        return self.width * self.height

    @property
    def center(self):
        return (self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2

    def translate(self, dx, dy):
        return Box(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def within(self, width, height):
        return self.x1 >= 0 and self.y1 >= 0 and self.x2 <= width and self.y2 <= height


def iou(a: Box, b: Box) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


class Glyph:
    """Immutable grayscale raster. ``pixels`` is a read-only ``uint8`` array."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels):
        arr = np.array(pixels, dtype=np.uint8, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidParams(f"glyph must be a non-empty 2-D array, got shape {arr.shape}")
        arr.setflags(write=False)
        self._pixels = arr

    @classmethod
    def _wrap(cls, arr):
        # trusted fast path for kernel outputs that nobody else references
        g = cls.__new__(cls)
        arr.setflags(write=False)
        g._pixels = arr
        return g

    @property
    def pixels(self):
        return self._pixels

    @property
    def width(self):
        return self._pixels.shape[1]

    @property
    def height(self):
        return self._pixels.shape[0]

    @property
    def size(self):
        return self.width, self.height

    def __eq__(self, other):
        if not isinstance(other, Glyph):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and np.array_equal(self._pixels, other._pixels)

    def __hash__(self):
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self):
        return f"Glyph({self.width}x{self.height})"

    def tobytes(self):
        return self._pixels.tobytes()


def blank(width, height, fill=BACKGROUND) -> Glyph:
    if width < 1 or height < 1:
        raise InvalidParams(f"canvas size must be positive, got {width}x{height}")
    return Glyph._wrap(np.full((int(height), int(width)), fill, dtype=np.uint8))


def ink_bounding_box(g: Glyph, threshold=INK_THRESHOLD) -> Box:
    box = K.ink_bbox(g.pixels, int(threshold))
    if box is None:
        raise EmptyGlyph("glyph contains no ink")
    return Box(*box)


def has_ink(g: Glyph, threshold=INK_THRESHOLD) -> bool:
    return K.ink_bbox(g.pixels, int(threshold)) is not None


def crop(g: Glyph, box: Box) -> Glyph:
    x1, y1, x2, y2 = (int(v) for v in box.as_list())
    if x1 < 0 or y1 < 0 or x2 > g.width or y2 > g.height:
        raise InvalidParams(f"crop box {box.as_list()} outside {g.width}x{g.height} glyph")
    return Glyph._wrap(g.pixels[y1:y2, x1:x2].copy())


def paste(canvas: Glyph, g: Glyph, x: int, y: int) -> Glyph:
    """Composite ``g`` onto ``canvas`` with its top-left at (x, y); darker ink wins."""
    if x < 0 or y < 0 or x + g.width > canvas.width or y + g.height > canvas.height:
        raise InvalidParams(f"paste of {g!r} at ({x},{y}) exceeds {canvas!r}")
    out = canvas.pixels.copy()
    region = out[y:y + g.height, x:x + g.width]
    np.minimum(region, g.pixels, out=region)
    return Glyph._wrap(out)


def resize(g: Glyph, width: int, height: int) -> Glyph:
    if width < 1 or height < 1:
        raise InvalidParams(f"output size must be positive, got {width}x{height}")
    if (width, height) == g.size:
        return g
    return Glyph._wrap(K.resize_nearest(g.pixels, int(height), int(width)))


def scale(g: Glyph, fx: float, fy: float | None = None) -> Glyph:
    """Nearest-neighbour rescale; output size is ``round(w * fx) x round(h * fy)``."""
    fy = fx if fy is None else fy
    if fx <= 0 or fy <= 0:
        raise InvalidParams(f"scale factors must be positive, got {fx}, {fy}")
    return resize(g, int(round(g.width * fx)), int(round(g.height * fy)))


def pad(g: Glyph, left: int, top: int | None = None, right: int | None = None,
        bottom: int | None = None, fill=BACKGROUND) -> Glyph:
    top = left if top is None else top
    right = left if right is None else right
    bottom = top if bottom is None else bottom
    if min(left, top, right, bottom) < 0:
        raise InvalidParams("padding must be non-negative")
    arr = np.pad(g.pixels, ((top, bottom), (left, right)), constant_values=fill)
    return Glyph._wrap(arr)


def _warp_about_center(g, inv2, fill):
    # src = c + inv2 @ (dst - c), sampled at output pixel centres
    inv2 = np.asarray(inv2, dtype=np.float64)
    cx, cy = g.width / 2.0, g.height / 2.0
    off = np.array([cx, cy]) - inv2 @ np.array([cx, cy])
    inv = np.hstack([inv2, off[:, None]])
    return Glyph._wrap(K.warp_affine_nearest(g.pixels, inv, g.height, g.width, int(fill)))


def rotate(g: Glyph, degrees: float, fill=BACKGROUND) -> Glyph:
    """Rotate counter-clockwise (as displayed) about the centre; canvas size is kept."""
    degrees = math.fmod(degrees, 360.0)
    if degrees == 0.0:
        return g
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    # forward map in y-down coordinates is [[c, s], [-s, c]]; this is its inverse
    return _warp_about_center(g, [[c, -s], [s, c]], fill)


def shear(g: Glyph, sx: float, sy: float = 0.0, fill=BACKGROUND) -> Glyph:
    """Affine shear ``x' = x + sx*y, y' = y + sy*x`` about the centre."""
    if sx == 0.0 and sy == 0.0:
        return g
    fwd = np.array([[1.0, sx], [sy, 1.0]])
    det = 1.0 - sx * sy
    if abs(det) < 1e-9:
        raise InvalidParams(f"singular shear ({sx}, {sy})")
    return _warp_about_center(g, np.linalg.inv(fwd), fill)


@dataclass(frozen=True)
class AnnotatedImage:
    glyph: Glyph
    character_label: str
    radical_labels: tuple[str, ...]
    radical_boxes: tuple[Box, ...]
    structure_label: str
    image_id: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "radical_labels", tuple(self.radical_labels))
        object.__setattr__(self, "radical_boxes", tuple(self.radical_boxes))
        if len(self.radical_labels) != len(self.radical_boxes):
            raise ValidationError(
                f"{len(self.radical_labels)} radical labels but {len(self.radical_boxes)} boxes"
            )
        if (self.structure_label == "Single") != (len(self.radical_labels) == 1):
            raise ValidationError("structure Single iff exactly one radical")
        for b in self.radical_boxes:
            if not b.within(self.glyph.width, self.glyph.height):
                raise ValidationError(f"box {b.as_list()} outside {self.glyph!r}")

    def to_json(self, image_name=None):
        return {
            "image": image_name if image_name is not None else f"{self.image_id}.png",
            "image_id": self.image_id,
            "character_label": self.character_label,
            "structure_label": self.structure_label,
            "radicals": [
                {"label": lab, "box": _box_json(b)}
                for lab, b in zip(self.radical_labels, self.radical_boxes)
            ],
        }


def _box_json(b):
    return [int(v) if float(v).is_integer() else float(v) for v in b.as_list()]


def load_png(path) -> Glyph:
    with Image.open(path) as im:
        return Glyph._wrap(np.array(im.convert("L"), dtype=np.uint8))


def save_png(g: Glyph, path):
    Image.fromarray(np.asarray(g.pixels), mode="L").save(path, format="PNG", optimize=False)


def write_annotated(ai: AnnotatedImage, directory, stem=None):
    """Write ``<stem>.png`` plus ``<stem>.json`` sidecar; returns the sidecar dict."""
    directory = Path(directory)
    stem = stem or ai.image_id
    save_png(ai.glyph, directory / f"{stem}.png")
    record = ai.to_json(f"{stem}.png")
    (directory / f"{stem}.json").write_text(json.dumps(record, sort_keys=True) + "\n", encoding="utf-8")
    return record


def annotated_from_json(record, glyph: Glyph) -> AnnotatedImage:
    try:
        rads = record["radicals"]
        return AnnotatedImage(
            glyph=glyph,
            character_label=record.get("character_label", ""),
            radical_labels=tuple(r["label"] for r in rads),
            radical_boxes=tuple(Box.from_list(r["box"]) for r in rads),
            structure_label=record["structure_label"],
            image_id=record.get("image_id") or Path(record["image"]).stem,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad annotation record: {exc}") from None


def read_annotated(sidecar_path) -> AnnotatedImage:
    sidecar_path = Path(sidecar_path)
    try:
        record = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), sidecar_path) from None
    glyph = load_png(sidecar_path.parent / record["image"])
    return annotated_from_json(record, glyph)
