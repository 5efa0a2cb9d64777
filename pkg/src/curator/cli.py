"""Command-line front end.

Exit codes: 0 success, 1 validation/input error, 2 usage error.
Log level comes from ``CURATOR_LOG`` (error|warn|info|debug, default warn).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Sequence, TypeVar

from . import ada
from .acquisition import select_cdal, select_entropy, select_random
from .config import EngineConfig, load_config
from .errors import CuratorError, SingleView
from .fairness import repair_add, repair_add_proxy, repair_remove
from .records import (
    PredictionRecord,
    parse_groups,
    parse_labels,
    parse_predictions,
    write_labels,
    write_predictions,
)
from .signature import build_signature, distance_matrix, write_distance_csv
from .synth import SynthSpec, eval_cluster_coverage, gen_synth

log = logging.getLogger("curator")

T = TypeVar("T")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _read(path: str, parse: Callable[..., T], **kw) -> T:
    try:
        with open(path, "rb") as fh:
            return parse(fh, **kw)
    except CuratorError as e:
        err = type(e)(f"{path}: {e}")
        err.line = e.line
        raise err from None


def _preds(args, cfg: EngineConfig, path: str | None = None) -> list[PredictionRecord]:
    return _read(path or args.pred, parse_predictions, n_classes=cfg.n_classes, strict=not args.lenient)


def _canonical(records: Sequence[PredictionRecord]) -> list[PredictionRecord]:
    """One record per item: view 0 (or no view id) if present, else its lowest view."""
    best: dict[str, PredictionRecord] = {}
    for r in records:
        cur = best.get(r.item_id)
        if cur is None or (r.view_id or 0) < (cur.view_id or 0):
            best[r.item_id] = r
    return list(best.values())


def _config(args, n_classes: int | None = None) -> EngineConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "alpha", None) is not None:
        cfg.alpha = args.alpha
    if getattr(args, "per_frame_max", None) is not None:
        cfg.per_frame_max = args.per_frame_max
    return cfg.validate(n_classes)


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=2) + "\n")


def _n_classes(records: Sequence[PredictionRecord]) -> int | None:
    return records[0].n_classes if records else None


def cmd_select_cdal(args) -> int:
    cfg = _config(args)
    records = _canonical(_preds(args, cfg))
    cfg.validate(_n_classes(records))
    sigs = [build_signature(r, cfg.class_mask) for r in records]
    m = distance_matrix(sigs, cfg.eps, cfg.distance_cap, threads=args.threads)
    pre = [s for s in (args.preselected or "").split(",") if s]
    result = select_cdal(m, args.budget, pre)
    if args.matrix_out:
        with open(args.matrix_out, "w", encoding="utf-8", newline="") as fh:
            write_distance_csv(m, fh)
    _emit_json(args, result.to_dict())
    return 0


def cmd_select_entropy(args) -> int:
    cfg = _config(args)
    records = _canonical(_preds(args, cfg))
    cfg.validate(_n_classes(records))
    _emit_json(args, select_entropy(records, args.budget, cfg.eps).to_dict())
    return 0


def cmd_select_random(args) -> int:
    cfg = _config(args)
    records = _canonical(_preds(args, cfg))
    result = select_random([r.item_id for r in records], args.budget, cfg.seed)
    _emit_json(args, result.to_dict())
    return 0


def cmd_repair_remove(args) -> int:
    _config(args)
    labels = _read(args.labels, parse_labels, strict=not args.lenient)
    _emit_json(args, repair_remove(labels, args.target).to_dict("remove"))
    return 0


def cmd_repair_add(args) -> int:
    cfg = _config(args)
    strict = not args.lenient
    if args.groups:
        groups = _read(args.groups, parse_groups, strict=strict)
        current = _preds(args, cfg) if args.pred else []
        pool = _preds(args, cfg, args.pool)
        cfg.validate(_n_classes(pool))
        result = repair_add_proxy(
            [build_signature(r, cfg.class_mask) for r in _canonical(current)],
            [build_signature(r, cfg.class_mask) for r in _canonical(pool)],
            args.budget,
            groups,
        )
    else:
        current = _read(args.labels, parse_labels, strict=strict) if args.labels else []
        pool = _read(args.pool, parse_labels, strict=strict)
        result = repair_add(current, pool, args.budget)
    _emit_json(args, result.to_dict("add"))
    return 0


def _emit_recommendations(args, recs: Sequence[ada.RegionRecommendation]):
    lines = "".join(json.dumps(r.to_dict()) + "\n" for r in recs)
    _emit(args, lines)
    summary = json.dumps(ada.summarize(recs), indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(summary, encoding="utf-8")
    elif args.out:
        sys.stdout.write(summary)


def _anchor_scores(rec: PredictionRecord, anchors: ada.AnchorSet, cfg: EngineConfig) -> dict[int, float]:
    sig = build_signature(rec, cfg.class_mask)
    hard = ada.class_hardness(rec, cfg.eps, cfg.class_mask)
    return ada.score_anchor(sig, hard, anchors, cfg.alpha, cfg.eps, cfg.distance_cap)


def _anchors(args, cfg: EngineConfig) -> ada.AnchorSet:
    train = _canonical(_preds(args, cfg, args.train))
    return ada.build_anchors([build_signature(r, cfg.class_mask) for r in train])


def cmd_ada_anchor(args) -> int:
    cfg = _config(args)
    frames = _canonical(_preds(args, cfg))
    cfg.validate(_n_classes(frames))
    anchors = _anchors(args, cfg)
    scored = [
        ada.FrameScores(r.item_id, _anchor_scores(r, anchors, cfg), ada.class_weights(r, cfg.class_mask))
        for r in frames
    ]
    _emit_recommendations(args, ada.recommend(scored, args.budget, cfg.per_frame_max))
    return 0


def cmd_ada_augment(args) -> int:
    cfg = _config(args)
    records = _preds(args, cfg)
    cfg.validate(_n_classes(records))
    by_item: dict[str, list[PredictionRecord]] = {}
    for r in records:
        by_item.setdefault(r.item_id, []).append(r)
    anchors = _anchors(args, cfg) if args.train else None
    scored = []
    for item_id, views in by_item.items():
        views = sorted(views, key=lambda v: v.view_id or 0)
        if len(views) < 2:
            raise SingleView(f"{args.pred}: item {item_id!r} has a single view")
        scores = ada.score_augmentation(views, cfg.eps, cfg.class_mask)
        if anchors is not None:
            scores = ada.combine_mean(scores, _anchor_scores(views[0], anchors, cfg))
        weights = ada.class_weights(views[0], cfg.class_mask)
        for c in scores:
            if c not in weights:
                ws = [w[c] for w in (ada.class_weights(v, cfg.class_mask) for v in views) if c in w]
                weights[c] = sum(ws) / len(ws)
        scored.append(ada.FrameScores(item_id, scores, weights))
    _emit_recommendations(args, ada.recommend(scored, args.budget, cfg.per_frame_max))
    return 0


def cmd_gen_synth(args) -> int:
    spec = SynthSpec(
        n_items=args.n_items,
        n_clusters=args.n_clusters,
        n_classes=args.classes,
        regions_per_item=args.regions,
        bias=args.bias,
        noise=args.noise,
        seed=args.seed if args.seed is not None else 0,
        n_groups=args.n_groups,
        biased_classes=args.biased_classes,
    )
    preds, labels = gen_synth(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "predictions.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        write_predictions(preds, fh)
    with open(out / "labels.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        write_labels(labels, fh)
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    records = _canonical(_preds(args, cfg))
    try:
        report = json.loads(Path(args.selection).read_text(encoding="utf-8"))
        selected = report["selected"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise CuratorError(f"{args.selection}: not a selection report ({e})") from None
    cov = eval_cluster_coverage(selected, records)
    _emit_json(args, {"method": report.get("method"), "cluster_coverage": cov, "n_selected": len(selected)})
    return 0


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _class_list(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON EngineConfig")
    common.add_argument("--out", help="report path (default: stdout)")
    common.add_argument("--threads", type=_positive_int, default=1)
    common.add_argument("--lenient", action="store_true", help="ignore unknown JSON keys")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="curator", description="Context-aware data curation")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func, help: str):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    p = add("select-cdal", cmd_select_cdal, "contextual-diversity selection")
    p.add_argument("--pred", required=True)
    p.add_argument("--budget", type=_positive_int, required=True)
    p.add_argument("--preselected", help="comma-separated ids already labeled")
    p.add_argument("--matrix-out", help="export the distance matrix as CSV")

    p = add("select-entropy", cmd_select_entropy, "max-entropy baseline")
    p.add_argument("--pred", required=True)
    p.add_argument("--budget", type=_positive_int, required=True)

    p = add("select-random", cmd_select_random, "seeded random baseline")
    p.add_argument("--pred", required=True)
    p.add_argument("--budget", type=_positive_int, required=True)

    p = add("repair-remove", cmd_repair_remove, "remove items to balance co-occurrence")
    p.add_argument("--labels", required=True)
    p.add_argument("--target", type=_positive_int, required=True, help="items to keep")

    p = add("repair-add", cmd_repair_add, "add pool items to balance co-occurrence")
    p.add_argument("--labels", help="current labeled set")
    p.add_argument("--pool", required=True, help="candidate labels, or predictions with --groups")
    p.add_argument("--pred", help="current set as predictions (proxy mode)")
    p.add_argument("--groups", help="group side table; switches to prediction proxy mode")
    p.add_argument("--budget", type=_positive_int, required=True)

    for name, func, help in (
        ("ada-anchor", cmd_ada_anchor, "anchor-based hard-class recommendation"),
        ("ada-augment", cmd_ada_augment, "augmentation-based hard-class recommendation"),
    ):
        p = add(name, func, help)
        p.add_argument("--pred", required=True)
        p.add_argument("--train", required=(name == "ada-anchor"), help="training-set predictions")
        p.add_argument("--budget", type=float, required=True, help="total est_weight to spend")
        p.add_argument("--per-frame-max", type=_positive_int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--summary", help="summary JSON path")

    p = add("gen-synth", cmd_gen_synth, "write a synthetic dataset to --out DIR")
    p.add_argument("--n-items", type=_positive_int, default=120)
    p.add_argument("--n-clusters", type=_positive_int, default=3)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--regions", type=_positive_int, default=4)
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--n-groups", type=int, default=2)
    p.add_argument("--biased-classes", type=_class_list)

    p = add("eval", cmd_eval, "cluster coverage of a selection report")
    p.add_argument("--pred", required=True)
    p.add_argument("--selection", required=True)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("CURATOR_LOG", "warn").lower()
    logging.basicConfig(level=_LOG_LEVELS.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "gen-synth" and not args.out:
        parser.print_usage(sys.stderr)
        print("curator: error: gen-synth requires --out DIR", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except CuratorError as e:
        print(f"curator: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"curator: error: {e.filename}: {e.strerror}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
