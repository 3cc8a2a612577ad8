"""Radical-level annotation helpers and inter-annotator agreement.

Covers the automated part of the annotation pipeline: single-radical images
are labelled straight from the dictionary with their ink box, and two
experts' records are merged slot by slot, deferring to a senior annotator
wherever they disagree. Agreement is Krippendorff's alpha.
"""
from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .dictionary import SINGLE
from .errors import InsufficientData, NotSingleRadical, ParseError, ValidationError
from .glyph import AnnotatedImage, Box, ink_bounding_box, iou

log = logging.getLogger(__name__)

AGREED = "agreed(E1)"
ARBITRATED = "arbitrated(SE)"


@dataclass(frozen=True)
class AnnotationRecord:
    annotator_id: str
    image_id: str
    radical_labels: tuple[str, ...]
    radical_boxes: tuple[Box, ...]
    structure_label: str
    character_label: str = ""
    group: str = ""

    def __post_init__(self):
        object.__setattr__(self, "radical_labels", tuple(self.radical_labels))
        object.__setattr__(self, "radical_boxes", tuple(self.radical_boxes))
        if len(self.radical_labels) != len(self.radical_boxes):
            raise ValidationError(
                f"{self.image_id}/{self.annotator_id}: {len(self.radical_labels)} labels, "
                f"{len(self.radical_boxes)} boxes"
            )

    def to_json(self):
        doc = {
            "annotator_id": self.annotator_id,
            "image_id": self.image_id,
            "character_label": self.character_label,
            "structure_label": self.structure_label,
            "radicals": [
                {"label": lab, "box": b.as_list()} for lab, b in zip(self.radical_labels, self.radical_boxes)
            ],
        }
        if self.group:
            doc["group"] = self.group
        return doc

    @classmethod
    def from_json(cls, doc):
        try:
            rads = doc.get("radicals", [])
            return cls(
                str(doc["annotator_id"]), str(doc["image_id"]),
                tuple(r["label"] for r in rads), tuple(Box.from_list(r["box"]) for r in rads),
                doc["structure_label"], doc.get("character_label", ""), doc.get("group", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad annotation record: {exc!r}") from None


def read_records(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(AnnotationRecord.from_json(json.loads(line)))
                except (json.JSONDecodeError, ParseError) as exc:
                    raise ParseError(str(exc), path, lineno) from None
    return out


def write_records(records, path):
    Path(path).write_text(
        "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in records), encoding="utf-8"
    )


def auto_annotate_single(image, character, dictionary, image_id=""):
    """Label a single-radical character image without human input."""
    k = dictionary.get_num(character)
    if k != 1:
        raise NotSingleRadical(f"{character!r} decomposes into {k} radicals")
    radical = dictionary.entry(character).radicals[0]
    box = ink_bounding_box(image)
    return AnnotatedImage(image, character, (radical,), (box,), SINGLE, image_id)


def greedy_box_matching(a, b):
    """Pair boxes of ``a`` and ``b`` greedily by descending IoU.

    Returns ``{i: j}``; pairs with zero overlap are never formed. Ties are
    resolved by index order, so identical lists map i -> i.
    """
    pairs = sorted(
        ((iou(x, y), i, j) for i, x in enumerate(a) for j, y in enumerate(b)),
        key=lambda p: (-p[0], p[1], p[2]),
    )
    used_a, used_b, out = set(), set(), {}
    for v, i, j in pairs:
        if v <= 0.0:
            break
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        out[i] = j
    return out


@dataclass(frozen=True)
class MergeResult:
    final: AnnotationRecord
    radical_provenance: tuple[str, ...]
    structure_provenance: str
    slot_count_mismatch: bool = False
    notes: tuple[str, ...] = field(default=())


def merge_annotations(e1, e2, se, iou_match=0.9):
    """Merge two experts' records, taking the senior expert's value wherever
    they disagree (label differs, or boxes overlap less than ``iou_match``)."""
    if not (e1.image_id == e2.image_id == se.image_id):
        raise ValidationError("merge inputs refer to different images")
    structure = e1.structure_label if e1.structure_label == e2.structure_label else se.structure_label
    s_prov = AGREED if e1.structure_label == e2.structure_label else ARBITRATED

    if len(e1.radical_labels) != len(e2.radical_labels):
        log.warning(
            "%s: annotators disagree on radical count (%d vs %d); using senior record",
            e1.image_id, len(e1.radical_labels), len(e2.radical_labels),
        )
        final = AnnotationRecord(
            se.annotator_id, se.image_id, se.radical_labels, se.radical_boxes, structure,
            se.character_label or e1.character_label, e1.group,
        )
        return MergeResult(
            final, (ARBITRATED,) * len(se.radical_labels), s_prov, True,
            ("radical count mismatch between E1 and E2",),
        )

    to_e2 = greedy_box_matching(e1.radical_boxes, e2.radical_boxes)
    to_se = greedy_box_matching(e1.radical_boxes, se.radical_boxes)
    labels, boxes, prov, notes = [], [], [], []
    for i, (lab, box) in enumerate(zip(e1.radical_labels, e1.radical_boxes)):
        j = to_e2.get(i)
        agree = (
            j is not None and e2.radical_labels[j] == lab
            and iou(box, e2.radical_boxes[j]) >= iou_match
        )
        if agree:
            labels.append(lab)
            boxes.append(box)
            prov.append(AGREED)
            continue
        k = to_se.get(i, i if i < len(se.radical_labels) else None)
        if k is None:
            notes.append(f"slot {i}: senior record has no matching radical; kept E1")
            labels.append(lab)
            boxes.append(box)
            prov.append(AGREED)
            continue
        labels.append(se.radical_labels[k])
        boxes.append(se.radical_boxes[k])
        prov.append(ARBITRATED)
    if s_prov == AGREED and all(p == AGREED for p in prov) and not notes:
        final = e1
    else:
        final = AnnotationRecord(
            "merged", e1.image_id, tuple(labels), tuple(boxes), structure,
            e1.character_label if e1.character_label == e2.character_label else se.character_label,
            e1.group,
        )
    return MergeResult(final, tuple(prov), s_prov, False, tuple(notes))


# -- Krippendorff's alpha --------------------------------------------------

def coincidence_matrix(units):
    """Nominal coincidence counts ``o[(c, k)]`` over pairable units."""
    o = Counter()
    for values in units:
        values = [v for v in values if v is not None]
        m = len(values)
        if m < 2:
            continue
        counts = Counter(values)
        for c, nc in counts.items():
            for k, nk in counts.items():
                pairs = nc * (nc - 1) if c == k else nc * nk
                if pairs:
                    o[(c, k)] += pairs / (m - 1)
    return o


def krippendorff_alpha_nominal(units):
    """Krippendorff's alpha for nominal data.

    ``units`` is a list of per-item value lists (one value per annotator;
    ``None`` marks a missing value). Items with fewer than two values are
    not pairable and are ignored. Returns 1.0 when every pairable value is
    identical (no disagreement is possible or observed).
    """
    o = coincidence_matrix(units)
    n_c = Counter()
    for (c, _), v in o.items():
        n_c[c] += v
    n = sum(n_c.values())
    if n < 2 or sum(1 for u in units if sum(v is not None for v in u) >= 2) < 1:
        raise InsufficientData("need at least one item with two or more values")
    observed = sum(v for (c, k), v in o.items() if c != k)
    expected = sum(n_c[c] * n_c[k] for c in n_c for k in n_c if c != k)
    if expected == 0:
        return 1.0
    return 1.0 - (n - 1) * observed / expected


def krippendorff_alpha(units, distance):
    """Alpha with an arbitrary pairwise ``distance(a, b)``.

    Pairwise form: ``D_o`` averages distances over ordered within-item pairs
    (each item weighted ``1 / (m_u - 1)``), ``D_e`` over all ordered pairs of
    pairable values.
    """
    pairable = [[v for v in u if v is not None] for u in units]
    pairable = [u for u in pairable if len(u) >= 2]
    if not pairable:
        raise InsufficientData("need at least one item with two or more values")
    n = sum(len(u) for u in pairable)
    d_o = 0.0
    for u in pairable:
        m = len(u)
        d_o += sum(distance(u[i], u[j]) for i in range(m) for j in range(m) if i != j) / (m - 1)
    d_o /= n
    flat = [v for u in pairable for v in u]
    d_e = sum(distance(flat[i], flat[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    if d_e == 0:
        return 1.0
    return 1.0 - d_o / d_e


def box_distance(threshold=0.5):
    """Binary box distance: 0 when IoU >= threshold, else 1."""
    def dist(a, b):
        return 0.0 if iou(a, b) >= threshold else 1.0
    return dist


MISSING = "<none>"


def _radical_units(records, box_iou=0.5):
    """Align every record's radicals to the first annotator's by greedy IoU.

    Returns (label units, box units); an annotator with no counterpart for a
    reference radical contributes ``MISSING`` / ``None``; extra radicals open
    new units where the reference contributes ``MISSING``.
    """
    ref = records[0]
    label_units = [[lab] for lab in ref.radical_labels]
    box_units = [[b] for b in ref.radical_boxes]
    for rec in records[1:]:
        match = greedy_box_matching(ref.radical_boxes, rec.radical_boxes)
        matched = set(match.values())
        for i in range(len(ref.radical_labels)):
            j = match.get(i)
            label_units[i].append(rec.radical_labels[j] if j is not None else MISSING)
            box_units[i].append(rec.radical_boxes[j] if j is not None else None)
        for j, lab in enumerate(rec.radical_labels):
            if j not in matched:
                label_units.append([MISSING, lab])
                box_units.append([None, rec.radical_boxes[j]])
    return label_units, box_units


@dataclass(frozen=True)
class AgreementReport:
    alpha: dict
    items: dict
    groups: dict

    def to_json(self):
        return {"alpha": self.alpha, "items": self.items, "groups": self.groups}


FIELDS = ("C_L", "R_L", "R_C", "S_L")


def group_alphas(records, box_iou=0.5):
    by_image = defaultdict(list)
    for r in records:
        by_image[r.image_id].append(r)
    units = {f: [] for f in FIELDS}
    for image_id in sorted(by_image):
        recs = sorted(by_image[image_id], key=lambda r: r.annotator_id)
        if len(recs) < 2:
            continue
        units["C_L"].append([r.character_label for r in recs])
        units["S_L"].append([r.structure_label for r in recs])
        lab_u, box_u = _radical_units(recs, box_iou)
        units["R_L"] += lab_u
        units["R_C"] += box_u
    alphas, counts = {}, {}
    for f in FIELDS:
        counts[f] = len(units[f])
        if f == "R_C":
            alphas[f] = krippendorff_alpha(units[f], box_distance(box_iou))
        else:
            alphas[f] = krippendorff_alpha_nominal(units[f])
    return alphas, counts


def agreement_report(records, box_iou=0.5):
    """Per-field alpha within each annotator group, averaged over groups."""
    groups = defaultdict(list)
    for r in records:
        groups[r.group].append(r)
    per_group, total = {}, Counter()
    for g in sorted(groups):
        try:
            alphas, counts = group_alphas(groups[g], box_iou)
        except InsufficientData:
            log.warning("group %r has no doubly-annotated items; skipped", g)
            continue
        per_group[g] = alphas
        total.update(counts)
    if not per_group:
        raise InsufficientData("no group has an image annotated at least twice")
    avg = {f: sum(a[f] for a in per_group.values()) / len(per_group) for f in FIELDS}
    return AgreementReport(avg, dict(total), per_group)
