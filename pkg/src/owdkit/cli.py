"""Command-line batch frontend.

Subcommands: ``saliency``, ``merge``, ``relabel``, ``split``, ``evaluate``.
Exit status is 0 on success, 2 on input errors (including any per-image
failure) and 1 on internal errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .errors import DegenerateDenominator, OwdError
from .fusion import FusionWeights, load_weights, merge
from .imageio import encode_png, read_image, read_saliency, write_saliency
from .manifest import UNKNOWN_NAME, dumps_json, load_manifest, save_manifest
from .metrics import (
    COCO_THRESHOLDS,
    absolute_open_set_error,
    coco_suite,
    dumps_report,
    format_table,
    mean_defined,
    read_detections,
    wilderness_impact,
)
from .relabel import RelabelConfig, read_proposals, relabel_dataset_detailed
from .saliency import SpectralConfig, region_saliency, spectral_residual
from .splits import (
    PRESETS,
    get_preset,
    load_schedule,
    make_openset_view,
    make_task_view,
    merge_classes,
    select_exemplar_replay,
    select_proposal_holdout,
    split_summary,
)

log = logging.getLogger("owdkit")


class InputError(Exception):
    """Bad user input; maps to exit status 2."""


def _pmap(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _image_root(args):
    if args.image_root:
        return Path(args.image_root)
    return Path(args.manifest).parent if getattr(args, "manifest", None) else Path(".")


def _report_failures(failures):
    for ident, msg in failures:
        print(f"error: {ident}: {msg}", file=sys.stderr)
    return 2 if failures else 0


# saliency


def cmd_saliency(args) -> int:
    cfg = SpectralConfig(args.working_width, args.log_epsilon, args.smooth_kernel, args.postblur_sigma)
    if args.manifest:
        m = load_manifest(args.manifest)
        root = _image_root(args)
        jobs = [(im.id, root / im.file) for im in m.images]
    else:
        jobs = [(Path(p).stem, Path(p)) for p in args.images]
    regions = read_proposals(args.proposals) if args.proposals else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    suffix = ".salf" if args.format == "salf" else ".png"

    def work(job):
        image_id, path = job
        try:
            img = read_image(path)
            if regions is None:
                sal = spectral_residual(img, cfg)
            else:
                p = regions.get(image_id)
                sal = region_saliency(img, p.boxes if p else [], cfg)
            name = f"{image_id}{suffix}"
            write_saliency(out / name, sal)
            return image_id, name, None
        except (OSError, ValueError, OwdError) as e:
            return image_id, None, f"{path}: {e}"

    results = _pmap(work, jobs, args.workers)
    index = {str(i): name for i, name, err in results if err is None}
    failures = [(str(i), err) for i, _, err in results if err is not None]
    (out / "index.json").write_text(
        dumps_json(
            {
                "mode": "regions" if regions is not None else "full",
                "config": cfg.__dict__,
                "images": index,
                "failures": [f for _, f in failures],
            }
        )
    )
    return _report_failures(failures)


# merge


def cmd_merge(args) -> int:
    m = load_manifest(args.manifest)
    root = _image_root(args)
    index_path = Path(args.saliency)
    index = json.loads(index_path.read_text())["images"]
    weights = load_weights(args.weights) if args.weights else FusionWeights()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def work(im):
        key = str(im.id)
        if key not in index:
            return key, None, f"MissingSaliency: no saliency map for image {key!r}"
        try:
            img = read_image(root / im.file)
            sal = read_saliency(index_path.parent / index[key])
            fused = merge(img, sal, weights)
            name = f"{key}.png"
            (out / name).write_bytes(encode_png(fused))
            return key, name, None
        except (OSError, ValueError, OwdError) as e:
            return key, None, f"{type(e).__name__}: {e}"

    results = _pmap(work, m.images, args.workers)
    failures = [(k, err) for k, _, err in results if err is not None]
    (out / "index.json").write_text(
        dumps_json(
            {
                "weights": weights.to_dict(),
                "images": {k: n for k, n, err in results if err is None},
                "failures": [f"{k}: {e}" for k, e in failures],
            }
        )
    )
    return _report_failures(failures)


# relabel


def cmd_relabel(args) -> int:
    m = load_manifest(args.manifest)
    proposals = read_proposals(args.proposals)
    cfg = RelabelConfig(alpha=args.alpha, dedup_iou=args.dedup_iou)
    res = relabel_dataset_detailed(m, proposals, cfg, args.workers)
    save_manifest(res.manifest, args.out, extra={"relabel": {"alpha": args.alpha, "dedup_iou": args.dedup_iou}})
    print(format_table(res.counts, "relabel summary"), end="")
    return 0


# split


def _schedule(args):
    if args.schedule:
        return load_schedule(args.schedule), Path(args.schedule).name
    if args.preset:
        return get_preset(args.preset).schedule, args.preset
    raise InputError("--preset or --schedule is required for this mode")


def cmd_split(args) -> int:
    m = load_manifest(args.manifest)
    preset = get_preset(args.preset) if args.preset else None
    if args.merge:
        if preset is None:
            raise InputError("--merge needs --preset")
        m = merge_classes(m, preset.merge)
    split = args.split or m.split
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"seed": args.seed, "preset": args.preset, "mode": args.mode, "task": args.task, "split": split}

    if args.holdout:
        hold = select_proposal_holdout(m, args.holdout, args.seed)
        (out / "holdout.json").write_text(
            dumps_json({**meta, "image_ids": hold.image_ids, "report": hold.report.to_dict()})
        )
        m = hold.remainder

    if args.mode == "closeset":
        view = m
    elif args.mode == "openset":
        known = args.known.split(",") if args.known else (preset.openset_known if preset else None)
        if not known:
            raise InputError("openset mode needs --known or --preset")
        view = make_openset_view(m, sorted(known), split)
    else:
        if args.task is None:
            raise InputError("openworld mode needs --task")
        schedule, _ = _schedule(args)
        view = make_task_view(m, schedule, args.task, split)
        if split == "train":
            classes = sorted(schedule.known_at(args.task) & set(m.category_ids))
            rep = select_exemplar_replay(m, classes, args.replay_min, args.seed)
            (out / "replay.json").write_text(
                dumps_json(
                    {
                        **meta,
                        "classes": classes,
                        "min_instances": args.replay_min,
                        "image_ids": rep.image_ids,
                        "counts": rep.counts,
                        "shortfall": rep.shortfall,
                    }
                )
            )
    save_manifest(view, out / "view.json", extra={"provenance": meta})
    print(format_table(split_summary(view)["instances"], "instances per class"), end="")
    return 0


# evaluate


def cmd_evaluate(args) -> int:
    m = load_manifest(args.manifest)
    dets = read_detections(args.detections)
    known_images = set(m.image_ids)
    dangling = sorted({str(d.image_id) for d in dets if d.image_id not in known_images})
    if dangling:
        raise InputError("detections reference images missing from the manifest: " + ", ".join(dangling))
    thresholds = tuple(float(t) for t in args.thresholds.split(",")) if args.thresholds else COCO_THRESHOLDS

    schedule = None
    if args.task is not None:
        schedule, _ = _schedule(args)
        m = make_task_view(m, schedule, args.task, "val")
    names = m.category_names
    unk_id = m.category_ids.get(UNKNOWN_NAME)
    report: dict = {"mode": args.mode, "task": args.task, "preset": args.preset, "thresholds": list(thresholds)}

    if args.mode == "closeset":
        res = coco_suite(dets, m.annotations, thresholds, args.max_dets)
        report["metrics"] = res.to_dict(names)
    elif args.mode == "openset":
        truth = [a for a in m.annotations if unk_id is None or a.category == unk_id]
        res = coco_suite(dets, truth, thresholds, args.max_dets, class_agnostic=True)
        report["metrics"] = res.to_dict(names)
    else:
        known = [a for a in m.annotations if a.category != unk_id]
        unknown = [a for a in m.annotations if a.category == unk_id]
        kdets = [d for d in dets if d.category != unk_id]
        res = coco_suite(kdets, known, thresholds, args.max_dets)
        report["metrics"] = res.to_dict(names)
        ap50 = {"all_known": mean_defined(res.per_category_ap50.values())}
        if schedule is not None:
            ids = m.category_ids
            cur = {ids[n] for n in schedule.introduced(args.task) if n in ids}
            prev = {ids[n] for n in schedule.known_at(args.task) - schedule.introduced(args.task) if n in ids}
            ap50["previously_known"] = mean_defined(v for c, v in res.per_category_ap50.items() if c in prev)
            ap50["current_known"] = mean_defined(v for c, v in res.per_category_ap50.items() if c in cur)
        report["known_ap50"] = ap50
        try:
            report["wilderness"] = wilderness_impact(kdets, known, unknown, args.score_thr, cap=args.max_dets).to_dict()
        except DegenerateDenominator as e:
            report["wilderness"] = {"wi": None, "error": str(e)}
        report["a_ose"] = absolute_open_set_error(kdets, unknown, 0.5, args.score_thr, args.max_dets).to_dict(names)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps_report(report))
    rows = dict(res.summary())
    if args.mode == "openworld":
        rows["known_ap50"] = report["known_ap50"]["all_known"]
        rows["wi"] = report["wilderness"].get("wi")
        rows["a_ose"] = report["a_ose"]["a_ose"]
    text = format_table(rows, f"{args.mode} evaluation")
    (out / "report.txt").write_text(text)
    print(text, end="")
    return 0


# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="owdkit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--help-json", action="store_true", help="print the flag schema as JSON and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    def common(sp, manifest_required=True):
        sp.add_argument("--manifest", required=manifest_required, help="dataset manifest JSON")
        sp.add_argument("--workers", type=int, default=1, help="worker threads (output is identical for any value)")
        sp.add_argument("--out", required=True, help="output path")

    s = sub.add_parser("saliency", help="spectral-residual saliency maps")
    common(s, manifest_required=False)
    s.add_argument("--images", nargs="+", help="image files, used when no manifest is given")
    s.add_argument("--image-root", help="directory holding manifest images (default: manifest's directory)")
    s.add_argument("--proposals", help="JSON-lines boxes restricting saliency to regions")
    s.add_argument("--format", choices=("png", "salf"), default="png")
    s.add_argument("--working-width", type=int, default=64)
    s.add_argument("--log-epsilon", type=float, default=1e-8)
    s.add_argument("--smooth-kernel", type=int, default=3)
    s.add_argument("--postblur-sigma", type=float, default=2.5)
    s.set_defaults(func=cmd_saliency)

    s = sub.add_parser("merge", help="fuse images with their saliency maps")
    common(s)
    s.add_argument("--saliency", required=True, help="index.json written by the saliency command")
    s.add_argument("--weights", help="fusion weights JSON")
    s.add_argument("--image-root")
    s.set_defaults(func=cmd_merge)

    s = sub.add_parser("relabel", help="add unknown-class annotations from proposals")
    common(s)
    s.add_argument("--proposals", required=True)
    s.add_argument("--alpha", type=float, default=0.3)
    s.add_argument("--dedup-iou", type=float, default=0.9)
    s.set_defaults(func=cmd_relabel)

    s = sub.add_parser("split", help="close-set / open-set / open-world dataset views")
    common(s)
    s.add_argument("--mode", choices=("closeset", "openset", "openworld"), required=True)
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--schedule", help="task schedule JSON (overrides the preset's)")
    s.add_argument("--task", type=int)
    s.add_argument("--split", choices=("train", "val"))
    s.add_argument("--known", help="comma-separated known classes for openset mode")
    s.add_argument("--merge", action="store_true", help="apply the preset's class merge map first")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replay-min", type=int, default=50)
    s.add_argument("--holdout", type=int, default=0, help="number of proposal holdout images")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("evaluate", help="COCO AP/AR, WI and A-OSE")
    common(s)
    s.add_argument("--detections", required=True)
    s.add_argument("--mode", choices=("closeset", "openset", "openworld"), default="closeset")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--schedule")
    s.add_argument("--task", type=int)
    s.add_argument("--thresholds", help="comma-separated IoU thresholds (default 0.50:0.95:0.05)")
    s.add_argument("--max-dets", type=int, default=100)
    s.add_argument("--score-thr", type=float, default=0.05)
    s.set_defaults(func=cmd_evaluate)
    return p


def help_schema(parser: argparse.ArgumentParser) -> dict:
    def flags(p):
        out = {}
        for a in p._actions:
            if not a.option_strings or isinstance(a, (argparse._HelpAction, argparse._SubParsersAction)):
                continue
            if isinstance(a, (argparse._StoreTrueAction, argparse._VersionAction)):
                kind = "boolean"
            elif a.type is int:
                kind = "integer"
            elif a.type is float:
                kind = "number"
            else:
                kind = "array" if a.nargs in ("+", "*") else "string"
            spec = {"type": kind, "required": bool(a.required)}
            if a.choices:
                spec["enum"] = list(a.choices)
            if a.default not in (None, False, argparse.SUPPRESS):
                spec["default"] = a.default
            if a.help:
                spec["description"] = a.help
            out[max(a.option_strings, key=len)] = spec
        return out

    schema = {"program": parser.prog, "version": __version__, "flags": flags(parser), "commands": {}}
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            for name, sp in a.choices.items():
                schema["commands"][name] = flags(sp)
    return schema


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.help_json:
        print(json.dumps(help_schema(parser), indent=2))
        return 0
    if not args.command:
        parser.print_help()
        return 2
    if getattr(args, "command", None) == "saliency" and not (args.manifest or args.images):
        print("error: saliency needs --manifest or --images", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (InputError, OwdError, KeyError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
