"""Confidence-based radical/character matching.

Candidate radical sets are per-slot candidate choices ranked by their mean
confidence ``P_R``; structures are ranked by their own confidence ``P_S``.
The top-``t`` of each are crossed, looked up in the dictionary, and a match
scores ``p_c = theta * P_R + (1 - theta) * P_S``. A character reachable
through several pairs keeps its best score.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

from .errors import IndexOutOfRange, InvalidParams
from .glyph import Box, iou


@dataclass(frozen=True)
class ReasonerConfig:
    t: int = 5
    theta: float = 0.7

    def __post_init__(self):
        if self.t < 1:
            raise InvalidParams("t must be >= 1")
        if not (0.0 <= self.theta <= 1.0):
            raise InvalidParams("theta must be in [0, 1]")


@dataclass(frozen=True)
class Prediction:
    character: str
    p_c: float
    p_r: float
    p_s: float
    radicals: tuple[str, ...]
    structure: str


def radical_set_confidence(slots, assignment):
    """Mean confidence of the chosen candidate in each slot."""
    if len(assignment) != len(slots):
        raise IndexOutOfRange(f"{len(assignment)} choices for {len(slots)} slots")
    confs = []
    for slot, j in zip(slots, assignment):
        if not (0 <= j < len(slot.candidates)):
            raise IndexOutOfRange(f"candidate {j} not in slot {slot.index}")
        confs.append(slot.candidates[j].conf)
    return math.fsum(confs) / len(confs)


def top_assignments(slots, t):
    """The ``t`` best per-slot candidate choices by mean confidence.

    Yields ``(assignment, P_R)``; ties are broken by the lexicographically
    smaller index tuple. Lazy best-first search over the product space, so
    only O(t * n) sets are ever scored.
    """
    if t < 1:
        raise InvalidParams("t must be >= 1")
    if not slots:
        return []
    start = (0,) * len(slots)
    heap = [(-radical_set_confidence(slots, start), start)]
    seen = {start}
    out = []
    while heap and len(out) < t:
        neg, idx = heapq.heappop(heap)
        out.append((idx, -neg))
        for i in range(len(idx)):
            if idx[i] + 1 < len(slots[i].candidates):
                nxt = idx[:i] + (idx[i] + 1,) + idx[i + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (-radical_set_confidence(slots, nxt), nxt))
    return out


def top_structures(structures, t):
    ranked = sorted(enumerate(structures), key=lambda p: (-p[1].conf, p[0]))
    return [s for _, s in ranked[:t]]


def top_conf_enumerate(slots, structures, t):
    """Cross the top-t radical sets with the top-t structures.

    Returns ``(assignment, P_R, structure_label, P_S)`` tuples, radical sets
    outer, structures inner.
    """
    sets = top_assignments(slots, t)
    structs = top_structures(structures, t)
    return [(a, p_r, s.label, s.conf) for a, p_r in sets for s in structs]


def combine(p_r, p_s, theta):
    """``theta * p_r + (1 - theta) * p_s``, clamped so float rounding can never
    leave the interval spanned by the two inputs."""
    raw = theta * p_r + (1.0 - theta) * p_s
    return min(max(raw, min(p_r, p_s)), max(p_r, p_s))


def align_slots(slots, layout, image_size):
    """Reorder detected slots into ``layout``'s slot order by maximum total IoU
    between slot boxes and the layout's pixel rectangles."""
    n = len(slots)
    if n != layout.num_slots or n > 7 or n < 2:
        return tuple(slots)
    rects = [Box(*r) for r in layout.pixel_slots(image_size)]
    gain = [[iou(s.box, r) for r in rects] for s in slots]
    best, best_perm = None, None
    for perm in itertools.permutations(range(n)):
        # perm[k] = detected slot placed at layout position k
        total = math.fsum(gain[perm[k]][k] for k in range(n))
        if best is None or total > best + 1e-12:
            best, best_perm = total, perm
    return tuple(slots[i] for i in best_perm)


def crcm(dictionary, result, config=None, layouts=None):
    """Ranked character predictions for one :class:`DetectionResult`.

    Returns a list of :class:`Prediction` sorted by ``p_c`` (ties: higher
    ``P_R``, then label). An empty list means no dictionary character matches
    any considered combination.
    """
    config = config or ReasonerConfig()
    best = {}
    set_cache = {}
    for s in top_structures(result.structures, config.t):
        arity = dictionary.structures.get(s.label)
        if arity is None:
            continue
        slots = result.slots_for(s.label)
        if len(slots) != arity:
            continue
        if (
            s.label not in result.hypotheses and layouts and s.label in layouts
            and result.image_size is not None
        ):
            slots = align_slots(slots, layouts[s.label], result.image_size)
        key = tuple(id(x) for x in slots)
        if key not in set_cache:
            set_cache[key] = top_assignments(slots, config.t)
        for assignment, p_r in set_cache[key]:
            labels = tuple(slot.candidates[j].label for slot, j in zip(slots, assignment))
            for ch in dictionary.search_dic(labels, s.label):
                p_c = combine(p_r, s.conf, config.theta)
                pred = Prediction(ch, p_c, p_r, s.conf, labels, s.label)
                prev = best.get(ch)
                if prev is None or (p_c, p_r) > (prev.p_c, prev.p_r):
                    best[ch] = pred
    return sorted(best.values(), key=lambda p: (-p.p_c, -p.p_r, p.character))


def predictions_json(image_id, preds, top_k=None):
    preds = preds[:top_k] if top_k else preds
    return {"image_id": image_id, "predictions": [{"character": p.character, "p_c": p.p_c} for p in preds]}
