"""``radicalocr`` command-line entry point.

Results go to the files named by ``--out``; logs go to stderr. Exit codes:
0 success, 2 usage/configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import annotation as A
from . import detection as D
from . import evaluation as E
from . import reasoner as R
from . import synthesis as S
from . import toy
from .dictionary import load_dictionary, save_dictionary, validate
from .errors import ConfigError, DataError, ParseError
from .glyph import load_png
from .layouts import default_layouts, load_layouts, save_layouts
from .pipeline import SCHEMA_VERSION, PipelineConfig, run_end_to_end

log = logging.getLogger("radicalocr")

EXIT_CONFIG = 2
EXIT_DATA = 3


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _need(path, what):
    if path is None:
        raise ConfigError(f"--{what} is required")
    if not Path(path).exists():
        raise ConfigError(f"{what}: {path} does not exist")
    return Path(path)


def _layouts(args):
    if getattr(args, "layouts", None):
        return load_layouts(_need(args.layouts, "layouts"))
    return default_layouts()


def cmd_make_toy(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dictionary(toy.toy_dictionary(), out / "dictionary.txt")
    save_layouts(default_layouts(), out / "layouts.json")
    S.save_radical_set(toy.toy_radical_set(args.exemplars, args.seed), out / "radicals")
    config = {
        "seed": args.seed,
        "paths": {"dictionary": "dictionary.txt", "layouts": "layouts.json",
                  "radicals": "radicals", "output": "run"},
        "synthesis": {"n": 20, "scale_range": [0.9, 1.1], "rotation": 10.0, "shear": 0.05,
                      "pad_range": [0, 4]},
        "train": {"per_character": 4},
        "test": {"per_character": 3,
                 "augment": {"scale_range": [0.9, 1.1], "rotation": 10.0, "shear": 0.0,
                             "pad_range": [0, 0]}},
        "split": {"n_seen": toy.N_SEEN, "m_unseen": toy.M_UNSEEN},
        "reasoner": {"t": 5, "theta": 0.7, "top_k": 5},
    }
    _write_json(out / "config.json", config)
    log.info("toy world written to %s", out)


def cmd_dict_validate(args):
    d = load_dictionary(_need(args.dict, "dict"), check=False)
    problems = validate(d)
    for p in problems:
        log.error("%s", p)
    if args.out:
        _write_json(args.out, {"schema_version": SCHEMA_VERSION, "entries": len(d),
                               "radicals": len(d.radicals), "violations": problems})
    log.info("%d entries, %d violations", len(d), len(problems))
    return EXIT_DATA if problems else 0


def cmd_synth(args):
    if args.seed is None:
        raise ConfigError("--seed is required for synth")
    set_r = S.load_radical_set(_need(args.radicals, "radicals"))
    layouts = _layouts(args)
    structures = [s.strip() for s in args.structures.split(",") if s.strip()]
    common = dict(n=args.n, seed=args.seed, op_prob=args.op_prob,
                  dictionary_valid=args.dictionary_valid)
    if args.identity:
        config = S.SynthesisConfig.identity(**common)
    else:
        config = S.SynthesisConfig(
            scale_range=(args.scale_min, args.scale_max), rotation=args.rotation,
            shear=args.shear, pad_range=(0, args.pad_max), **common,
        )
    dictionary = load_dictionary(_need(args.dict, "dict")) if args.dict else None
    images = S.gen_img_set(set_r, structures, config, layouts, dictionary, args.workers)
    S.write_set(images, args.out, config)
    log.info("wrote %d images to %s", len(images), args.out)


def cmd_templates(args):
    train = S.read_manifest(_need(args.train, "train"))
    bank = D.build_templates(train, args.patch)
    bank.save(args.out)
    log.info("%d templates -> %s", len(bank), args.out)


def _images(path):
    path = _need(path, "images")
    if (path / "manifest.json").exists() if path.is_dir() else path.name.endswith(".json"):
        return [(ai.image_id, ai.glyph) for ai in S.read_manifest(path)]
    files = sorted(path.glob("*.png")) if path.is_dir() else [path]
    return [(f.stem, load_png(f)) for f in files]


def cmd_detect(args):
    bank = D.TemplateBank.load(_need(args.bank, "bank"))
    layouts = _layouts(args)
    results = [
        D.detect(g, bank, layouts, args.top_j, args.temperature, image_id=image_id)
        for image_id, g in _images(args.images)
    ]
    D.write_predictions(results, args.out)
    log.info("%d detection results -> %s", len(results), args.out)


def cmd_ingest(args):
    results = D.ingest_predictions(_need(args.predictions, "predictions"), args.obj_threshold,
                                   args.nms_iou, args.top_j)
    D.write_predictions(results, args.out)
    log.info("%d records normalised -> %s", len(results), args.out)


def cmd_reason(args):
    d = load_dictionary(_need(args.dict, "dict"))
    config = R.ReasonerConfig(args.t, args.theta)
    layouts = _layouts(args)
    results = D.ingest_predictions(_need(args.predictions, "predictions"))
    with open(args.out, "w", encoding="utf-8") as fh:
        for res in results:
            preds = R.crcm(d, res, config, layouts)
            fh.write(json.dumps(R.predictions_json(res.image_id, preds, args.top_k), sort_keys=True) + "\n")
    log.info("%d images reasoned -> %s", len(results), args.out)


def cmd_merge(args):
    e1 = {r.image_id: r for r in A.read_records(_need(args.e1, "e1"))}
    e2 = {r.image_id: r for r in A.read_records(_need(args.e2, "e2"))}
    se = {r.image_id: r for r in A.read_records(_need(args.se, "se"))}
    merged, report = [], []
    for image_id in sorted(e1):
        if image_id not in e2 or image_id not in se:
            raise DataError(f"image {image_id} lacks an E2 or SE record")
        res = A.merge_annotations(e1[image_id], e2[image_id], se[image_id], args.iou)
        merged.append(res.final)
        report.append({"image_id": image_id, "radicals": list(res.radical_provenance),
                       "structure": res.structure_provenance,
                       "slot_count_mismatch": res.slot_count_mismatch})
    A.write_records(merged, args.out)
    if args.report:
        _write_json(args.report, {"schema_version": SCHEMA_VERSION, "images": report})


def cmd_alpha(args):
    records = A.read_records(_need(args.records, "records"))
    report = A.agreement_report(records, args.box_iou)
    _write_json(args.out, {"schema_version": SCHEMA_VERSION, **report.to_json()})
    for f, v in report.alpha.items():
        log.info("alpha(%s) = %.4f", f, v)


def _truth(path):
    path = _need(path, "truth")
    if path.is_dir():
        path = path / "manifest.json"
    doc = json.loads(path.read_text(encoding="utf-8"))
    return doc["records"]


def _labeled(args):
    truth = {r.get("image_id") or Path(r["image"]).stem: r["character_label"] for r in _truth(args.truth)}
    out = []
    with open(_need(args.predictions, "predictions"), encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc = json.loads(line)
                if doc["image_id"] not in truth:
                    raise DataError(f"no ground truth for {doc['image_id']}")
                out.append(E.LabeledPrediction(
                    doc["image_id"], truth[doc["image_id"]],
                    tuple(p["character"] for p in doc["predictions"]),
                ))
    return out


def cmd_eval(args):
    report = {"schema_version": SCHEMA_VERSION, "metric": args.metric}
    if args.metric == "split":
        return cmd_split(args)
    if args.metric == "topk":
        labeled = _labeled(args)
        ks = [int(k) for k in args.k.split(",")]
        report["n"] = len(labeled)
        report["top_k"] = {str(k): E.top_k_accuracy(labeled, k) for k in ks}
    elif args.metric == "catavg":
        labeled = _labeled(args)
        report["n"] = len(labeled)
        report["cat_avg"] = E.cat_avg(labeled)
        report["per_category"] = E.per_category_accuracy(labeled)
    elif args.metric == "ap50":
        truth = S.read_manifest(_need(args.truth, "truth"))
        dets = D.ingest_predictions(_need(args.predictions, "predictions"))
        from .pipeline import detection_eval_records

        mean, per_cat = E.ap50(detection_eval_records(truth, dets), per_category=True)
        report["ap50"] = mean
        report["per_category"] = per_cat
    _write_json(args.out, report)
    if args.csv:
        rows = {k: v for k, v in report.items() if isinstance(v, (int, float))}
        for k, v in report.get("top_k", {}).items():
            rows[f"top{k}"] = v
        Path(args.csv).write_text(
            ",".join(rows) + "\n" + ",".join(str(v) for v in rows.values()) + "\n", encoding="utf-8"
        )


def cmd_split(args):
    d = load_dictionary(_need(args.dict, "dict"))
    spec = E.make_zero_shot_split(d.characters, args.n_seen, args.m_unseen, args.seed)
    _write_json(args.out, {"schema_version": SCHEMA_VERSION, **spec.to_json()})


def cmd_run(args):
    cfg = PipelineConfig.load(args.config)
    if args.out:
        cfg.output = Path(args.out)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    report = run_end_to_end(cfg)
    rec = report["recognition"]
    for part in ("all", "seen", "unseen"):
        if rec[part]:
            log.info("%-6s top1=%.4f top5=%.4f cat_avg=%.4f", part, rec[part]["top1"],
                     rec[part]["top5"], rec[part]["cat_avg"])
    log.info("ap50=%.4f", report["ap50"])


def build_parser():
    p = argparse.ArgumentParser(prog="radicalocr", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("make-toy", help="write the toy dictionary, layouts, radicals and config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--exemplars", type=int, default=1)
    s.set_defaults(func=cmd_make_toy)

    s = sub.add_parser("dict-validate", help="check a dictionary file")
    s.add_argument("--dict", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_dict_validate)

    s = sub.add_parser("synth", help="splice-based synthetic image generation")
    s.add_argument("--radicals", required=True)
    s.add_argument("--layouts")
    s.add_argument("--structures", required=True, help="comma-separated, e.g. UD,LR")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--dict", help="dictionary, required with --dictionary-valid")
    s.add_argument("--dictionary-valid", action="store_true")
    s.add_argument("--identity", action="store_true", help="no augmentation")
    s.add_argument("--scale-min", type=float, default=0.8)
    s.add_argument("--scale-max", type=float, default=1.2)
    s.add_argument("--rotation", type=float, default=10.0)
    s.add_argument("--shear", type=float, default=0.15)
    s.add_argument("--pad-max", type=int, default=8)
    s.add_argument("--op-prob", type=float, default=0.5)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("templates", help="build a template bank from an annotated set")
    s.add_argument("--train", required=True, help="manifest.json or its directory")
    s.add_argument("--out", required=True)
    s.add_argument("--patch", type=int, default=D.DEFAULT_PATCH)
    s.set_defaults(func=cmd_templates)

    s = sub.add_parser("detect", help="baseline radical/structure detection")
    s.add_argument("--bank", required=True)
    s.add_argument("--images", required=True, help="manifest, directory of PNGs, or one PNG")
    s.add_argument("--layouts")
    s.add_argument("--top-j", type=int, default=5)
    s.add_argument("--temperature", type=float, default=0.05)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("ingest", help="normalise external predictions (incl. raw grids)")
    s.add_argument("--predictions", required=True)
    s.add_argument("--obj-threshold", type=float, default=0.5)
    s.add_argument("--nms-iou", type=float, default=0.5)
    s.add_argument("--top-j", type=int, default=5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("reason", help="match detections against the dictionary")
    s.add_argument("--dict", required=True)
    s.add_argument("--predictions", required=True)
    s.add_argument("--layouts")
    s.add_argument("--t", type=int, default=5)
    s.add_argument("--theta", type=float, default=0.7)
    s.add_argument("--top-k", type=int, default=5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reason)

    s = sub.add_parser("merge", help="merge two annotators' records with senior arbitration")
    s.add_argument("--e1", required=True)
    s.add_argument("--e2", required=True)
    s.add_argument("--se", required=True)
    s.add_argument("--iou", type=float, default=0.9)
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_merge)

    s = sub.add_parser("alpha", help="Krippendorff's alpha per annotation field")
    s.add_argument("--records", required=True)
    s.add_argument("--box-iou", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_alpha)

    def split_args(s):
        s.add_argument("--dict")
        s.add_argument("--n-seen", type=int, default=0)
        s.add_argument("--m-unseen", type=int, default=0)
        s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("eval", help="metrics: topk, catavg, ap50, split")
    s.add_argument("metric", choices=["topk", "catavg", "ap50", "split"])
    s.add_argument("--predictions")
    s.add_argument("--truth", help="manifest with ground truth")
    s.add_argument("--k", default="1,3,5")
    s.add_argument("--out", required=True)
    s.add_argument("--csv")
    split_args(s)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("split", help="seen/unseen category split")
    split_args(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("run", help="end-to-end experiment from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr,
    )
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DataError, ParseError) as exc:
        log.error("[%s] %s: %s", args.command, type(exc).__name__, exc)
        return EXIT_DATA
    except (FileNotFoundError, IsADirectoryError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
