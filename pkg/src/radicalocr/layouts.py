"""Structure layouts: where each radical slot sits on the canvas.

Fourteen kinds ship by default. ``Single``, ``UD`` and ``SLR`` are the
commonly named ones; the other identifiers are this package's own. Slot
rectangles are normalised ``(x1, y1, x2, y2)`` fractions of the canvas and
listed in reading order (top-to-bottom, then left-to-right), which is also the
slot order used by dictionary entries. Surrounding/overlaid kinds have an
outer slot covering the canvas, so their slots may overlap.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, UnknownStructure, ValidationError

DEFAULT_CANVAS = (256, 256)


@dataclass(frozen=True)
class StructureLayout:
    kind: str
    slots: tuple[tuple[float, float, float, float], ...]
    overlapping: bool = False
    canvas_size: tuple[int, int] = DEFAULT_CANVAS

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(tuple(float(v) for v in s) for s in self.slots))
        object.__setattr__(self, "canvas_size", tuple(int(v) for v in self.canvas_size))
        problems = layout_problems(self)
        if problems:
            raise ValidationError(problems[0], problems)

    @property
    def num_slots(self):
        return len(self.slots)

    def pixel_slots(self, canvas_size=None):
        """Slot rectangles in integer pixel coordinates (half-open)."""
        w, h = canvas_size or self.canvas_size
        return [
            (int(round(x1 * w)), int(round(y1 * h)), int(round(x2 * w)), int(round(y2 * h)))
            for x1, y1, x2, y2 in self.slots
        ]

    def to_json(self):
        return {"kind": self.kind, "slots": [list(s) for s in self.slots], "overlapping": self.overlapping}


def layout_problems(layout):
    problems = []
    if not layout.slots:
        problems.append(f"{layout.kind}: no slots")
    if layout.kind == "Single" and len(layout.slots) != 1:
        problems.append("Single must have exactly one slot")
    if layout.kind != "Single" and len(layout.slots) < 2:
        problems.append(f"{layout.kind}: non-Single layouts need >= 2 slots")
    for s in layout.slots:
        x1, y1, x2, y2 = s
        if not (0.0 <= x1 < x2 <= 1.0 and 0.0 <= y1 < y2 <= 1.0):
            problems.append(f"{layout.kind}: slot {s} not inside the unit square")
    if not layout.overlapping:
        for i, a in enumerate(layout.slots):
            for b in layout.slots[i + 1:]:
                if min(a[2], b[2]) > max(a[0], b[0]) and min(a[3], b[3]) > max(a[1], b[1]):
                    problems.append(f"{layout.kind}: slots {a} and {b} overlap")
    return problems


def _surround(kind, inner):
    return StructureLayout(kind, ((0.0, 0.0, 1.0, 1.0), inner), overlapping=True)


def default_layouts(canvas_size=DEFAULT_CANVAS):
    third, two = 1 / 3, 2 / 3
    layouts = [
        StructureLayout("Single", ((0.0, 0.0, 1.0, 1.0),)),
        StructureLayout("UD", ((0.0, 0.0, 1.0, 0.5), (0.0, 0.5, 1.0, 1.0))),
        StructureLayout("LR", ((0.0, 0.0, 0.5, 1.0), (0.5, 0.0, 1.0, 1.0))),
        StructureLayout("UMD", ((0.0, 0.0, 1.0, third), (0.0, third, 1.0, two), (0.0, two, 1.0, 1.0))),
        StructureLayout("LMR", ((0.0, 0.0, third, 1.0), (third, 0.0, two, 1.0), (two, 0.0, 1.0, 1.0))),
        StructureLayout(
            "CX",
            (
                (0.25, 0.0, 0.75, 0.25),
                (0.0, 0.25, 0.25, 0.75),
                (0.25, 0.25, 0.75, 0.75),
                (0.75, 0.25, 1.0, 0.75),
                (0.25, 0.75, 0.75, 1.0),
            ),
        ),
        _surround("SLR", (0.2, 0.35, 0.8, 1.0)),
        _surround("SB", (0.2, 0.0, 0.8, 0.65)),
        _surround("SL", (0.35, 0.2, 1.0, 0.8)),
        _surround("SUL", (0.35, 0.35, 1.0, 1.0)),
        _surround("SUR", (0.0, 0.35, 0.65, 1.0)),
        _surround("SLL", (0.35, 0.0, 1.0, 0.65)),
        _surround("FS", (0.2, 0.2, 0.8, 0.8)),
        StructureLayout("OV", ((0.0, 0.0, 1.0, 1.0), (0.0, 0.0, 1.0, 1.0)), overlapping=True),
    ]
    return {
        lay.kind: StructureLayout(lay.kind, lay.slots, lay.overlapping, canvas_size) for lay in layouts
    }


def get_structure(kind, layouts):
    """Slot count and slot rectangles for ``kind``."""
    try:
        lay = layouts[kind]
    except KeyError:
        raise UnknownStructure(kind) from None
    return lay.num_slots, list(lay.slots)


def load_layouts(path):
    """Read a layouts JSON file: ``{"canvas_size": [w, h], "layouts": [...]}``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        canvas = tuple(doc.get("canvas_size", DEFAULT_CANVAS))
        out = {}
        for item in doc["layouts"]:
            lay = StructureLayout(
                item["kind"], tuple(tuple(s) for s in item["slots"]),
                bool(item.get("overlapping", False)), canvas,
            )
            if lay.kind in out:
                raise ParseError(f"layout {lay.kind} defined twice", path)
            out[lay.kind] = lay
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad layouts file: {exc}", path) from None
    return out


def save_layouts(layouts, path):
    layouts = list(layouts.values())
    canvas = layouts[0].canvas_size if layouts else DEFAULT_CANVAS
    doc = {"canvas_size": list(canvas), "layouts": [lay.to_json() for lay in layouts]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
