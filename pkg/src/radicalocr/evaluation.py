"""Recognition and detection metrics, and zero-shot split construction."""
from __future__ import annotations

import zlib
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGroundTruth, EmptyInput, InvalidParams, Overlap
from .glyph import Box, iou


@dataclass(frozen=True)
class LabeledPrediction:
    image_id: str
    true_character: str
    predicted: tuple[str, ...] = ()

    def __post_init__(self):
        # keep the first occurrence of a repeated label
        object.__setattr__(self, "predicted", tuple(dict.fromkeys(self.predicted)))


def top_k_accuracy(preds, k):
    if k < 1:
        raise InvalidParams("k must be >= 1")
    if not preds:
        raise EmptyInput("no predictions")
    hits = sum(1 for p in preds if p.true_character in p.predicted[:k])
    return hits / len(preds)


def per_category_accuracy(preds, k=1):
    total, hits = defaultdict(int), defaultdict(int)
    for p in preds:
        total[p.true_character] += 1
        hits[p.true_character] += p.true_character in p.predicted[:k]
    return {c: hits[c] / total[c] for c in total}


def cat_avg(preds, k=1):
    """Macro average of per-category top-1 accuracy."""
    if not preds:
        raise EmptyInput("no predictions")
    accs = per_category_accuracy(preds, k)
    return sum(accs.values()) / len(accs)


@dataclass(frozen=True)
class DetectionEvalRecord:
    image_id: str
    ground_truth: tuple[tuple[str, Box], ...]
    predicted: tuple[tuple[str, float, Box], ...] = ()


def average_precision(tp_flags, n_gt):
    """All-point interpolated AP of a confidence-ranked TP/FP sequence."""
    if n_gt <= 0:
        raise EmptyGroundTruth("category has no ground truth")
    tp = np.cumsum(np.asarray(tp_flags, dtype=np.float64))
    fp = np.cumsum(1.0 - np.asarray(tp_flags, dtype=np.float64))
    if tp.size == 0:
        return 0.0
    recall = np.concatenate([[0.0], tp / n_gt])
    precision = np.concatenate([[0.0], tp / np.maximum(tp + fp, 1e-300)])
    # precision envelope, right to left
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    steps = np.flatnonzero(recall[1:] != recall[:-1])
    return float(np.sum((recall[steps + 1] - recall[steps]) * precision[steps + 1]))


def category_ap(records, category, iou_threshold=0.5):
    # records are keyed by position, so repeated image ids cannot collide
    gts = [[b for lab, b in r.ground_truth if lab == category] for r in records]
    n_gt = sum(len(v) for v in gts)
    preds = [
        (conf, n, box)
        for n, r in enumerate(records)
        for lab, conf, box in r.predicted
        if lab == category
    ]
    order = sorted(range(len(preds)), key=lambda i: -preds[i][0])
    used = [[False] * len(v) for v in gts]
    flags = []
    for i in order:
        _, n, box = preds[i]
        best, best_j = -1.0, -1
        for j, g in enumerate(gts[n]):
            if used[n][j]:
                continue
            v = iou(box, g)
            if v > best:
                best, best_j = v, j
        if best_j >= 0 and best >= iou_threshold:
            used[n][best_j] = True
            flags.append(1)
        else:
            flags.append(0)
    return average_precision(flags, n_gt)


def ap50(records, iou_threshold=0.5, per_category=False):
    """Mean over radical categories (with >= 1 ground truth) of AP at IoU 0.5."""
    cats = list(dict.fromkeys(lab for r in records for lab, _ in r.ground_truth))
    if not cats:
        raise EmptyGroundTruth("no ground-truth radicals")
    aps = {c: category_ap(records, c, iou_threshold) for c in cats}
    mean = sum(aps.values()) / len(aps)
    return (mean, aps) if per_category else mean


@dataclass(frozen=True)
class SplitSpec:
    seen_categories: tuple[str, ...]
    unseen_categories: tuple[str, ...]
    train_fraction: float = 0.8
    seed: int = 0
    excluded: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if set(self.seen_categories) & set(self.unseen_categories):
            raise Overlap("seen and unseen categories intersect")

    def to_json(self):
        return {
            "seen_categories": list(self.seen_categories),
            "unseen_categories": list(self.unseen_categories),
            "excluded": list(self.excluded),
            "train_fraction": self.train_fraction,
            "seed": self.seed,
        }


def make_zero_shot_split(categories, n_seen, m_unseen, seed=0, train_fraction=0.8):
    """First ``n_seen`` categories are seen, last ``m_unseen`` unseen."""
    categories = list(categories)
    if n_seen < 0 or m_unseen < 0:
        raise InvalidParams("split sizes must be >= 0")
    if len(set(categories)) != len(categories):
        raise InvalidParams("category list has duplicates")
    if n_seen + m_unseen > len(categories):
        raise Overlap(f"{n_seen} seen + {m_unseen} unseen exceeds {len(categories)} categories")
    seen = categories[:n_seen]
    unseen = categories[len(categories) - m_unseen:] if m_unseen else []
    rest = categories[n_seen:len(categories) - m_unseen]
    return SplitSpec(tuple(seen), tuple(unseen), train_fraction, seed, tuple(rest))


def split_seen_samples(samples, spec, key=lambda s: s):
    """Partition samples of seen categories into (train, test) per category.

    ``samples`` are ``(category, item)`` pairs; order within a category is
    shuffled with a stream derived from ``(spec.seed, category)``.
    """
    by_cat = defaultdict(list)
    for cat, item in samples:
        if cat in spec.seen_categories:
            by_cat[cat].append(item)
    train, test = [], []
    for cat in spec.seen_categories:
        items = sorted(by_cat.get(cat, []), key=key)
        rng = np.random.default_rng([spec.seed, zlib.crc32(cat.encode())])
        perm = rng.permutation(len(items))
        cut = int(round(len(items) * spec.train_fraction))
        train += [(cat, items[i]) for i in perm[:cut]]
        test += [(cat, items[i]) for i in perm[cut:]]
    return train, test
