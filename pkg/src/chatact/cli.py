"""Command-line entry points for the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    attach_annotations,
    corpus_stats,
    parse_labeled,
    parse_slack_export,
    parse_transcript,
    read_annotations,
    serialize_labeled,
    split_corpus,
)
from .errors import ChatactError
from .labeler import (
    FeatureConfig,
    TrainConfig,
    evaluate,
    label_dialogue,
    load_model,
    prepare_windows,
    read_emissions,
    save_model,
    train_crf,
)
from .labeler.baseline import BaselineConfig, train_baseline
from .metrics import build_report, render_report, report_to_json
from .segmentation import segment, windows_to_jsonl
from .store import ProjectStore
from .taxonomy import default_taxonomy, load_taxonomy_file
from .validation import (
    compute_centroids,
    hierarchy_consistency_report,
    most_similar_pair,
)
from .validation import render_report as render_validation


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _taxonomy(args):
    if getattr(args, "taxonomy", None):
        return load_taxonomy_file(args.taxonomy)
    return default_taxonomy()


def _load_annotated(args):
    dialogue = parse_transcript(_read(args.input))
    if getattr(args, "annotations", None):
        records = read_annotations(_read(args.annotations))
        dialogue = attach_annotations(dialogue, records)
    return dialogue


def _segment_args(parser):
    parser.add_argument("--strategy", default="static",
                        choices=["message", "static", "time", "speaker"])
    parser.add_argument("--line-limit", type=float, default=10)
    parser.add_argument("--gap-limit", default="1h",
                        help="duration like 1h, 30m, or seconds")
    parser.add_argument("--speaker-limit", type=int, default=2)


def _do_segment(dialogue, args):
    from .corpus import parse_duration

    return segment(
        dialogue, args.strategy,
        line_limit=args.line_limit,
        gap_limit=parse_duration(args.gap_limit),
        speaker_limit=args.speaker_limit,
    )


# -- subcommands -----------------------------------------------------------


def cmd_ingest(args) -> int:
    if args.format == "slack":
        user_map = json.loads(_read(args.user_map)) if args.user_map else None
        dialogue = parse_slack_export(_read(args.input), user_map,
                                      dialogue_id=args.dialogue_id or "slack")
    else:
        dialogue = parse_transcript(_read(args.input),
                                    dialogue_id=args.dialogue_id)
    from .corpus import serialize_transcript

    text = serialize_transcript(dialogue)
    if args.store:
        store = ProjectStore(args.store)
        store_id = store.put_dialogue(text)
        print(f"stored dialogue {store_id} "
              f"({len(dialogue.messages)} messages, "
              f"{len(dialogue.sentences)} sentences)")
    else:
        _write(args.output, text)
    if dialogue.dropped or dialogue.rejected:
        print(f"dropped {dialogue.dropped} subtype records, "
              f"rejected {dialogue.rejected} malformed records",
              file=sys.stderr)
    if dialogue.reordered:
        print("warning: input timestamps were out of order; re-sorted",
              file=sys.stderr)
    return 0


def cmd_segment(args) -> int:
    dialogue = parse_transcript(_read(args.input))
    windows = _do_segment(dialogue, args)
    _write(args.output, windows_to_jsonl(windows))
    return 0


def cmd_train(args) -> int:
    taxonomy = _taxonomy(args)
    dialogue = _load_annotated(args)
    windows = _do_segment(dialogue, args)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    split = split_corpus([w.id for w in windows], ratios, seed=args.split_seed)
    by_id = {w.id: w for w in windows}
    label_set = tuple(taxonomy.reduced_labels())
    fc = FeatureConfig(dim=args.feature_dim)
    train_pw = prepare_windows(dialogue, [by_id[i] for i in split.train],
                               taxonomy, label_set, fc)
    dev_pw = prepare_windows(dialogue, [by_id[i] for i in split.dev],
                             taxonomy, label_set, fc)
    config = TrainConfig(seed=args.seed, l2=args.l2,
                         max_epochs=args.max_epochs, patience=args.patience,
                         feature_config=fc)
    from .corpus import parse_duration

    seg_info = {"strategy": args.strategy, "line_limit": args.line_limit,
                "gap_limit": parse_duration(args.gap_limit),
                "speaker_limit": args.speaker_limit}
    model = train_crf(train_pw, dev_pw, label_set, taxonomy.content_hash(),
                      config, segmentation=seg_info)
    save_model(model, args.output)
    if any((pw.gold >= 0).any() for pw in dev_pw):
        report = evaluate(model, dialogue, [by_id[i] for i in split.dev],
                          taxonomy)
        print(f"dev accuracy {report.accuracy:.4f} "
              f"({report.n_labeled} sentences)")
    print(f"model written to {args.output}")
    return 0


def cmd_label(args) -> int:
    model = load_model(args.model)
    dialogue = _load_annotated(args)
    seg = model.segmentation or {}
    windows = segment(
        dialogue, seg.get("strategy", "static"),
        line_limit=seg.get("line_limit") or 10,
        gap_limit=seg.get("gap_limit") or 3600.0,
        speaker_limit=int(seg.get("speaker_limit") or 2),
    )
    extra = None
    if args.emissions:
        extra = read_emissions(_read(args.emissions), model, dialogue)
    labeled = label_dialogue(model, dialogue, windows, extra)
    _write(args.output, serialize_labeled(labeled))
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    taxonomy = _taxonomy(args)
    if model.taxonomy_hash != taxonomy.content_hash():
        raise ChatactError(
            f"model taxonomy {model.taxonomy_hash!r} does not match "
            f"the supplied taxonomy {taxonomy.content_hash()!r}"
        )
    dialogue = _load_annotated(args)
    seg = model.segmentation or {}
    windows = segment(
        dialogue, seg.get("strategy", "static"),
        line_limit=seg.get("line_limit") or 10,
        gap_limit=seg.get("gap_limit") or 3600.0,
        speaker_limit=int(seg.get("speaker_limit") or 2),
    )
    extra = None
    if args.emissions:
        extra = read_emissions(_read(args.emissions), model, dialogue)
    report = evaluate(model, dialogue, windows, taxonomy, extra)
    print(report.summary())
    return 0


def cmd_validate_taxonomy(args) -> int:
    taxonomy = _taxonomy(args)
    dialogue = _load_annotated(args)
    texts, labels = [], []
    for s in dialogue.sentences:
        if s.gold_label is not None:
            texts.append(s.text)
            labels.append(s.gold_label)
    if not texts:
        raise ChatactError("no gold labels in the corpus")
    label_set = tuple(sorted(taxonomy.labels))
    config = BaselineConfig(seed=args.seed, epochs=args.epochs)
    model = train_baseline(texts, labels, label_set, config)
    centroids, omitted = compute_centroids(model, dialogue, mode=args.mode)
    report = hierarchy_consistency_report(centroids, taxonomy)
    pair = most_similar_pair(centroids)
    print(render_validation(report))
    print(f"most similar labels: {pair[0]} / {pair[1]} at {pair[2]:.3f}")
    if omitted:
        print(f"labels with zero support omitted: {len(omitted)}")
    if args.json:
        payload = {
            "classes": report["classes"],
            "all_mean": report["all_mean"],
            "violations": report["violations"],
            "most_similar": {"a": pair[0], "b": pair[1],
                             "distance": pair[2]},
            "omitted": omitted,
            "centroid_mode": args.mode,
        }
        _write(args.json, json.dumps(payload, indent=2))
    return 0


def cmd_metrics(args) -> int:
    taxonomy = _taxonomy(args)
    dialogue = parse_labeled(_read(args.input))
    report = build_report(dialogue, taxonomy)
    if args.format == "text":
        _write(args.output, render_report(report) + "\n")
    else:
        _write(args.output, report_to_json(report) + "\n")
    return 0


def cmd_stats(args) -> int:
    taxonomy = _taxonomy(args)
    dialogue = _load_annotated(args)
    split = None
    windows = None
    if args.ratios:
        windows = _do_segment(dialogue, args)
        ratios = tuple(float(x) for x in args.ratios.split(","))
        split = split_corpus([w.id for w in windows], ratios, seed=args.seed)
    stats = corpus_stats(dialogue, taxonomy, split, windows)
    for part, table in stats["partitions"].items():
        print(f"[{part}]")
        for label, prop in sorted(table.items(), key=lambda kv: -kv[1]):
            print(f"  {label:<28}{prop:.3f}")
        unlabeled = stats["unlabeled"][part]
        if unlabeled:
            print(f"  (unlabeled: {unlabeled})")
    return 0


def cmd_synth(args) -> int:
    from .synth import SynthConfig, generate, write_corpus

    corpus = generate(SynthConfig(n_sentences=args.sentences, seed=args.seed))
    transcript, annotations = write_corpus(corpus, args.output)
    print(f"wrote {transcript} and {annotations} "
          f"({len(corpus.dialogue.sentences)} sentences, "
          f"majority label {corpus.majority_label})")
    return 0


def cmd_serve(args) -> int:
    from .server import serve_forever

    store_root = args.store or os.environ.get("CHATACT_STORE")
    if not store_root:
        raise ChatactError("no store: pass --store or set CHATACT_STORE")
    bind = args.bind or os.environ.get("CHATACT_BIND") or "127.0.0.1:8057"
    store = ProjectStore(store_root)
    if args.taxonomy:
        store.put_taxonomy(load_taxonomy_file(args.taxonomy))
    else:
        try:
            store.taxonomy_hash()
        except ChatactError:
            store.put_taxonomy(default_taxonomy())
    serve_forever(store, bind, ui_origin=args.ui_origin)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="chatact",
                     description="dialogue-act labeling and team metrics "
                                 "for chat transcripts")
    parser.add_argument("--version", action="version",
                        version=f"chatact {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a transcript")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=["native", "slack"], default="native")
    p.add_argument("--user-map", dest="user_map")
    p.add_argument("--dialogue-id", dest="dialogue_id")
    p.add_argument("--out", dest="output")
    p.add_argument("--store")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("segment", help="split a dialogue into windows")
    p.add_argument("--in", dest="input", required=True)
    _segment_args(p)
    p.add_argument("--out", dest="output")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("train", help="train the CRF labeler")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--taxonomy")
    _segment_args(p)
    p.add_argument("--ratios", default="0.8,0.05,0.15")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--feature-dim", type=int, default=2 ** 18)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("label", help="decode a transcript with a model")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--annotations")
    p.add_argument("--model", required=True)
    p.add_argument("--emissions")
    p.add_argument("--out", dest="output")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("evaluate", help="score a model against gold labels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--emissions")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate-taxonomy",
                       help="centroid distance check of the label hierarchy")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--mode", choices=["sentence_mean", "output_row"],
                   default="sentence_mean")
    p.add_argument("--json", help="also write machine-readable output here")
    p.set_defaults(func=cmd_validate_taxonomy)

    p = sub.add_parser("metrics", help="team metrics from a labeled stream")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--out", dest="output")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("stats", help="label proportions per partition")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--annotations")
    p.add_argument("--taxonomy")
    _segment_args(p)
    p.add_argument("--ratios")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate the synthetic demo corpus")
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--sentences", type=int, default=4000)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--store")
    p.add_argument("--bind")
    p.add_argument("--taxonomy")
    p.add_argument("--ui-origin", default="*")
    p.set_defaults(func=cmd_serve)

    return parser


def cli_run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return 1
    try:
        return args.func(args)
    except ChatactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
