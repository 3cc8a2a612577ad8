"""End-to-end experiment: synthesise, build templates, detect, reason, score.

Configured by a JSON file; every random draw derives from the ``seed`` so two
runs with the same config write byte-identical outputs.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import detection as D
from . import evaluation as E
from . import reasoner as R
from . import synthesis as S
from .dictionary import SINGLE, load_dictionary
from .errors import ConfigError
from .layouts import default_layouts, load_layouts

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def _synth_config(section, seed, n=0):
    section = dict(section or {})
    allowed = {f.name for f in fields(S.SynthesisConfig)}
    unknown = set(section) - allowed - {"identity"}
    if unknown:
        raise ConfigError(f"unknown synthesis keys: {sorted(unknown)}")
    identity = section.pop("identity", False)
    section.setdefault("seed", seed)
    section.setdefault("n", n)
    for key in ("scale_range", "pad_range"):
        if key in section:
            section[key] = tuple(section[key])
    return S.SynthesisConfig.identity(**section) if identity else S.SynthesisConfig(**section)


@dataclass
class PipelineConfig:
    dictionary: Path
    radicals: Path | None
    output: Path
    seed: int
    layouts: Path | None = None
    synthesis: dict = field(default_factory=dict)
    train_per_character: int = 2
    test: dict = field(default_factory=dict)
    test_per_character: int = 3
    n_seen: int = 20
    m_unseen: int = 8
    train_fraction: float = 0.8
    t: int = 5
    theta: float = 0.7
    top_k: int = 5
    patch: int = D.DEFAULT_PATCH
    temperature: float = 0.05
    top_j: int = 5
    workers: int = 1

    @classmethod
    def from_dict(cls, doc, base_dir=None):
        base = Path(base_dir) if base_dir else Path.cwd()
        if "seed" not in doc:
            raise ConfigError("config must set an explicit seed")
        paths = doc.get("paths", {})
        if not paths.get("dictionary"):
            raise ConfigError("config is missing paths.dictionary")
        if not paths.get("output"):
            raise ConfigError("config is missing paths.output")

        def p(key):
            v = paths.get(key)
            return (base / v) if v else None

        split = doc.get("split", {})
        reason = doc.get("reasoner", {})
        det = doc.get("detector", {})
        train = doc.get("train", {})
        test = doc.get("test", {})
        return cls(
            dictionary=p("dictionary"), radicals=p("radicals"), output=p("output"),
            layouts=p("layouts"), seed=int(doc["seed"]),
            synthesis=doc.get("synthesis", {}),
            train_per_character=int(train.get("per_character", 2)),
            test=test.get("augment", {}), test_per_character=int(test.get("per_character", 3)),
            n_seen=int(split.get("n_seen", 20)), m_unseen=int(split.get("m_unseen", 8)),
            train_fraction=float(split.get("train_fraction", 0.8)),
            t=int(reason.get("t", 5)), theta=float(reason.get("theta", 0.7)),
            top_k=int(reason.get("top_k", 5)),
            patch=int(det.get("patch", D.DEFAULT_PATCH)),
            temperature=float(det.get("temperature", 0.05)), top_j=int(det.get("top_j", 5)),
            workers=int(doc.get("workers", 1)),
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        return cls.from_dict(doc, path.parent)

    def check_paths(self):
        for name in ("dictionary", "radicals", "layouts"):
            v = getattr(self, name)
            if v is not None and not Path(v).exists():
                raise ConfigError(f"paths.{name}: {v} does not exist")
        if self.radicals is None:
            raise ConfigError("config is missing paths.radicals")


def _render_set(entries, set_r, layouts, config, tag, per_char, prefix):
    out = []
    for e in entries:
        for r in range(per_char):
            rng = S.image_rng(config.seed, f"{tag}:{e.character}", r)
            ai = S.render_character(
                e, set_r, layouts[e.structure], config, rng, image_id=f"{prefix}{len(out):05d}"
            )
            out.append(ai)
    return out


def _metrics(labeled):
    if not labeled:
        return None
    return {
        "n": len(labeled),
        "top1": E.top_k_accuracy(labeled, 1),
        "top3": E.top_k_accuracy(labeled, 3),
        "top5": E.top_k_accuracy(labeled, 5),
        "cat_avg": E.cat_avg(labeled),
    }


def detection_eval_records(truth, detections):
    """Pair ground-truth radicals with every slot candidate of the top hypothesis."""
    by_id = {d.image_id: d for d in detections}
    records = []
    for ai in truth:
        det = by_id.get(ai.image_id)
        preds = ()
        if det is not None:
            preds = tuple((c.label, c.conf, c.box) for slot in det.slots for c in slot.candidates)
        records.append(E.DetectionEvalRecord(
            ai.image_id, tuple(zip(ai.radical_labels, ai.radical_boxes)), preds
        ))
    return records


def run_end_to_end(cfg: PipelineConfig):
    cfg.check_paths()
    dictionary = load_dictionary(cfg.dictionary)
    layouts = load_layouts(cfg.layouts) if cfg.layouts else default_layouts()
    set_r = S.load_radical_set(cfg.radicals)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)

    missing = [k for k in dictionary.structures if k not in layouts]
    if missing:
        raise ConfigError(f"no layout registered for dictionary structures {missing}")

    split = E.make_zero_shot_split(
        dictionary.characters, cfg.n_seen, cfg.m_unseen, cfg.seed, cfg.train_fraction
    )
    (out / "split.json").write_text(json.dumps(split.to_json(), indent=1) + "\n", encoding="utf-8")
    seen = dictionary.subset(split.seen_categories)
    seen_entries = list(seen.entries)
    unseen_entries = [dictionary.entry(c) for c in split.unseen_categories]

    # training corpus: splice-synthesised seen characters (+ seen singles)
    train_cfg = _synth_config(cfg.synthesis, cfg.seed, cfg.train_per_character)
    compound_kinds = [k for k in seen.structures if k != SINGLE and any(
        e.structure == k for e in seen_entries)]
    train_cfg_dv = replace(train_cfg, dictionary_valid=True)
    log.info("synthesising %d images per structure over %s", train_cfg.n, compound_kinds)
    train = S.gen_img_set(set_r, compound_kinds, train_cfg_dv, layouts, seen, cfg.workers)
    singles = [e for e in seen_entries if e.structure == SINGLE]
    train += _render_set(singles, set_r, layouts, train_cfg, "train", cfg.train_per_character, "Single_")
    S.write_set(train, out / "train", train_cfg_dv)

    bank = D.build_templates(train, cfg.patch)
    bank.save(out / "templates.npz")
    log.info("template bank: %d radical categories", len(bank))

    test_cfg = _synth_config(cfg.test, cfg.seed + 1, 0)
    test_seen = _render_set(seen_entries, set_r, layouts, test_cfg, "test", cfg.test_per_character, "seen_")
    test_unseen = _render_set(unseen_entries, set_r, layouts, test_cfg, "test", cfg.test_per_character, "unseen_")
    test = test_seen + test_unseen
    S.write_set(test, out / "test", test_cfg)

    detections = [
        D.detect(ai.glyph, bank, layouts, cfg.top_j, cfg.temperature, image_id=ai.image_id)
        for ai in test
    ]
    D.write_predictions(detections, out / "detections.jsonl")

    rcfg = R.ReasonerConfig(cfg.t, cfg.theta)
    labeled = {"seen": [], "unseen": []}
    with open(out / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for ai, det in zip(test, detections):
            preds = R.crcm(dictionary, det, rcfg, layouts)
            fh.write(json.dumps(R.predictions_json(ai.image_id, preds, cfg.top_k), sort_keys=True) + "\n")
            part = "unseen" if ai.character_label in split.unseen_categories else "seen"
            labeled[part].append(E.LabeledPrediction(
                ai.image_id, ai.character_label, tuple(p.character for p in preds[:cfg.top_k])
            ))

    report = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "counts": {"train_images": len(train), "test_images": len(test), "templates": len(bank)},
        "recognition": {
            "all": _metrics(labeled["seen"] + labeled["unseen"]),
            "seen": _metrics(labeled["seen"]),
            "unseen": _metrics(labeled["unseen"]),
        },
        "ap50": E.ap50(detection_eval_records(test, detections)),
        "reasoner": {"t": cfg.t, "theta": cfg.theta},
    }
    (out / "metrics.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    write_metrics_csv(report, out / "metrics.csv")
    return report


def write_metrics_csv(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["split", "n", "top1", "top3", "top5", "cat_avg"])
        for part, m in report["recognition"].items():
            if m:
                w.writerow([part, m["n"], m["top1"], m["top3"], m["top5"], m["cat_avg"]])
