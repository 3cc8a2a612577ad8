"""A small, fully synthetic world for demos and closed-loop tests.

Twelve procedurally drawn radicals and a 30-character dictionary over four
structures. The first 20 characters use every radical at least once, so a
template bank built from them covers the last characters, which can then be
held out as unseen categories.
"""
from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .dictionary import Radical, build_dictionary
from .glyph import Glyph
from .synthesis import RadicalImageSet

SIZE = 64

# stroke lists in a 0..64 box: ("line", pts...), ("rect", box), ("ellipse", box), ("poly", pts)
_STROKES = {
    "sun": [("rect", (14, 6, 50, 58)), ("line", (14, 32, 50, 32))],
    "moon": [("line", (20, 6, 20, 58)), ("line", (44, 6, 44, 58)), ("line", (20, 6, 44, 6)),
             ("line", (20, 24, 44, 24)), ("line", (20, 40, 44, 40))],
    "tree": [("line", (6, 22, 58, 22)), ("line", (32, 6, 32, 58)), ("line", (32, 24, 8, 54)),
             ("line", (32, 24, 56, 54))],
    "fire": [("line", (32, 8, 32, 30)), ("line", (32, 30, 8, 58)), ("line", (32, 30, 56, 58)),
             ("line", (12, 16, 18, 30)), ("line", (52, 16, 46, 30))],
    "water": [("line", (32, 6, 32, 58)), ("line", (8, 18, 24, 30)), ("line", (24, 30, 8, 50)),
              ("line", (56, 14, 40, 32)), ("line", (40, 32, 58, 54))],
    "mouth": [("poly", (32, 6, 58, 32, 32, 58, 6, 32))],
    "swine": [("ellipse", (6, 10, 46, 44)), ("line", (14, 44, 14, 58)), ("line", (38, 44, 38, 58)),
              ("line", (46, 20, 58, 8))],
    "toe": [("line", (32, 6, 32, 56)), ("line", (32, 28, 50, 28)), ("line", (10, 24, 10, 56)),
            ("line", (6, 56, 58, 56))],
    "house": [("line", (32, 4, 32, 16)), ("line", (6, 18, 58, 18)), ("line", (6, 18, 6, 46)),
              ("line", (58, 18, 58, 46))],
    "city": [("poly", (32, 6, 58, 56, 6, 56))],
    "hand": [("line", (10, 14, 54, 8)), ("line", (8, 28, 56, 28)), ("line", (6, 44, 58, 44)),
             ("line", (32, 8, 32, 58)), ("line", (32, 58, 22, 52))],
    "knife": [("line", (10, 12, 50, 12)), ("line", (50, 12, 50, 56)), ("line", (50, 56, 40, 50)),
              ("line", (28, 12, 8, 58))],
}

RADICAL_NAMES = {
    "sun": "sun", "moon": "moon", "tree": "tree", "fire": "fire", "water": "water",
    "mouth": "mouth", "swine": "swine (pig)", "toe": "toe (foot)", "house": "house (roof)",
    "city": "city wall", "hand": "hand", "knife": "knife",
}

_SINGLES = ["sun", "moon", "tree", "fire", "water", "mouth"]
_COMPOUNDS = [
    ("chase", "UD", ("swine", "toe")),
    ("UD", ("house", "swine")),
    ("UD", ("sun", "tree")),
    ("UD", ("hand", "knife")),
    ("UD", ("mouth", "city")),
    ("UD", ("fire", "water")),
    ("UD", ("tree", "toe")),
    ("LR", ("water", "tree")),
    ("LR", ("hand", "mouth")),
    ("LR", ("knife", "moon")),
    ("LR", ("city", "swine")),
    ("LR", ("toe", "house")),
    ("UMD", ("sun", "mouth", "toe")),
    ("UMD", ("house", "fire", "knife")),
    # positions 21-22: neither seen nor unseen in the default split
    ("LR", ("sun", "moon")),
    ("UD", ("moon", "hand")),
    # last eight: unseen categories
    ("UD", ("toe", "swine")),
    ("UD", ("knife", "hand")),
    ("LR", ("tree", "water")),
    ("LR", ("swine", "city")),
    ("LR", ("mouth", "hand")),
    ("UMD", ("toe", "mouth", "sun")),
    ("UMD", ("city", "house", "moon")),
    ("UD", ("water", "fire")),
]

TOY_STRUCTURES = {"Single": 1, "UD": 2, "LR": 2, "UMD": 3}
N_SEEN, M_UNSEEN = 20, 8


def toy_entries():
    entries = [(s, "Single", (s,)) for s in _SINGLES]
    for item in _COMPOUNDS:
        if len(item) == 3:
            entries.append(item)
        else:
            kind, rads = item
            entries.append((f"{kind.lower()}:{'+'.join(rads)}", kind, rads))
    return entries


def toy_dictionary():
    radicals = [Radical(r, RADICAL_NAMES[r]) for r in _STROKES]
    return build_dictionary(radicals, TOY_STRUCTURES, toy_entries())


def draw_radical(name, rng=None, jitter=0, width=7):
    """Render one radical on a 64x64 white canvas; ``jitter`` perturbs points."""
    im = Image.new("L", (SIZE, SIZE), 255)
    d = ImageDraw.Draw(im)

    def j(pts):
        if rng is None or jitter <= 0:
            return list(pts)
        return [int(np.clip(p + rng.integers(-jitter, jitter + 1), 2, SIZE - 3)) for p in pts]

    for kind, pts in _STROKES[name]:
        pts = j(pts)
        if kind == "line":
            d.line(pts, fill=0, width=width)
        elif kind == "rect":
            d.rectangle(pts, outline=0, width=width)
        elif kind == "ellipse":
            d.ellipse(pts, outline=0, width=width)
        elif kind == "poly":
            d.line(pts + pts[:2], fill=0, width=width, joint="curve")
    return Glyph(np.array(im, dtype=np.uint8))


def toy_radical_set(exemplars=1, seed=0, jitter=3):
    """First exemplar of each radical is the clean drawing; extras are jittered."""
    rng = np.random.default_rng(seed)
    out = {}
    for name in _STROKES:
        glyphs = [draw_radical(name)]
        glyphs += [draw_radical(name, rng, jitter) for _ in range(exemplars - 1)]
        out[name] = glyphs
    return RadicalImageSet(out)
