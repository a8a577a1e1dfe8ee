"""Command-line entry point: ``python -m paraphasia <command> ...``.

Usage examples:
  python -m paraphasia parse data/synthetic/sample.tsv --task phn-neo
  python -m paraphasia parse data/synthetic/sample.tsv --speakers data/synthetic/speakers.tsv -o manifest.jsonl
  python -m paraphasia tokenizer-train data/synthetic/manifest.jsonl --vocab-size 60 -o tok.tsv
  python -m paraphasia tokenize tok.tsv "i have aphasia"
  python -m paraphasia decode --grid utt.grid --scorer utt.scorer --ctc-weight 0.3
  python -m paraphasia eval --config data/synthetic/eval.conf --window 0 --window 1
  python -m paraphasia folds data/synthetic/manifest.jsonl --scheme protocol --seed 3 --balance
  python -m paraphasia report reports/report.csv --metric awer

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import jsonschema
import pydantic

from paraphasia import __version__
from paraphasia.config import (
    DEFAULT_BEAM_SIZE,
    DEFAULT_CTC_WEIGHT,
    DEFAULT_MAX_LEN,
    DEFAULT_SEED,
    DEFAULT_VOCAB_SIZE,
    MAX_DURATION_MS,
    MIN_DURATION_MS,
    SEVERITY_THRESHOLDS,
)
from paraphasia.corpus.balance import upsample_balance
from paraphasia.corpus.folds import loso_folds, split_protocol
from paraphasia.corpus.manifest import read_manifest, read_speaker_table, utterances_from_chat, write_manifest
from paraphasia.decode.search import BeamConfig, beam_search_joint, greedy_ctc_decode, hypothesis_awer
from paraphasia.decode.table_scorer import read_table_scorer
from paraphasia.errors import ParaphasiaError
from paraphasia.ingest.chat import (
    filter_utterances,
    load_code_map,
    normalize_transcript,
    read_cha_file,
    read_chat_records,
)
from paraphasia.labels import binarize_labels, build_awer_transcript, hypothesis_to_awer
from paraphasia.logging_config import setup_logging
from paraphasia.metrics.severity import corpus_summary
from paraphasia.models import CorpusManifest, Dataset, SpeakerGroup, SpeakerMeta, Task
from paraphasia.pipeline import load_config_file, run_evaluation
from paraphasia.report import read_report, render_frame, render_report
from paraphasia.scoring.grid import read_grid
from paraphasia.subword.unigram import decode_tokens, encode_text, load_model, save_model, train_unigram

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

TASK_CHOICES = [t.slug for t in Task]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for data errors."""

    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_parse(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if args.cha or path.suffix == ".cha":
        utts = read_cha_file(path, speaker_id=args.speaker)
    else:
        utts = read_chat_records(path)
    utts = filter_utterances(utts, args.min_ms, args.max_ms)
    records = utterances_from_chat(utts, Dataset(args.dataset), load_code_map())

    if args.output:
        if args.speakers:
            speakers = read_speaker_table(args.speakers)
        else:
            LOG.warning("No --speakers table: every speaker is recorded as aphasia without AQ")
            speakers = [SpeakerMeta(speaker_id=s, group=SpeakerGroup.APHASIA)
                        for s in sorted({r.speaker_id for r in records})]
        manifest = CorpusManifest(utterances=tuple(records), speakers=tuple(speakers))
        write_manifest(manifest, args.output)
        print(f"{len(records)} utterances -> {args.output}")
        return EXIT_OK

    for rec in records:
        transcript = build_awer_transcript(binarize_labels(rec.words, args.task))
        print(f"{rec.utterance_id}\t{transcript}")
    return EXIT_OK


def _training_text(path: Path, training: str) -> List[str]:
    if path.suffix == ".jsonl":
        manifest = read_manifest(path)
        return [
            " ".join(w.word for w in u.words)
            for u in manifest.utterances
            if training == "both" or u.dataset.value == training
        ]
    with open(path, "r", encoding="utf-8") as f:
        return [line.strip().lower() for line in f if line.strip()]


def _cmd_tokenizer_train(args: argparse.Namespace) -> int:
    corpus = _training_text(Path(args.input), args.training)
    model = train_unigram(corpus, args.vocab_size)
    save_model(model, args.output)
    print(f"{model.vocab_size} pieces -> {args.output}")
    return EXIT_OK


def _cmd_tokenize(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    lines = args.text or [line.rstrip("\n") for line in sys.stdin]
    for line in lines:
        ids = encode_text(model, " ".join(normalize_transcript(line.split())))
        if args.ids:
            print(" ".join(str(i) for i in ids))
        else:
            print(" ".join(model.piece_of(i) for i in ids))
        LOG.debug("round trip: %r", decode_tokens(model, ids))
    return EXIT_OK


def _cmd_decode(args: argparse.Namespace) -> int:
    grid = read_grid(args.grid)
    if args.scorer is None:
        tokens = greedy_ctc_decode(grid)
        transcript = hypothesis_to_awer([grid.token_text(t) for t in tokens], [0] * len(tokens))
        print(str(transcript))
        return EXIT_OK
    scorer = read_table_scorer(args.scorer)
    cfg = BeamConfig(beam_size=args.beam_size, ctc_weight=args.ctc_weight, max_len=args.max_len)
    hyp = beam_search_joint(args.grid, grid, scorer, cfg)
    print(str(hypothesis_awer(grid, hyp)))
    LOG.info("combined=%.4f att=%.4f ctc=%.4f", hyp.combined, hyp.att_score, hyp.ctc_score)
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    overrides: Dict[str, object] = {
        "task": args.task,
        "windows": args.window,
        "vocab_sweep": args.vocab_size,
        "ctc_weights": args.ctc_weight,
        "seed": args.seed,
        "formats": args.format,
        "output_dir": args.output_dir,
    }
    cfg = load_config_file(args.config, overrides)
    report = run_evaluation(cfg)
    print(f"{len(report.rows)} report rows -> {cfg.output_dir}")
    return EXIT_OK


def _cmd_folds(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest)
    folds = loso_folds(manifest) if args.scheme == "loso" else [split_protocol(manifest, args.seed)]
    payload: Dict[str, object] = {"scheme": args.scheme, "seed": args.seed, "folds": [f.to_dict() for f in folds]}
    if args.balance:
        balanced = {}
        for fold in folds:
            train = [
                (u.utterance_id, any(w.label for w in binarize_labels(u.words, args.task)))
                for u in manifest.utterances_for(fold.train)
            ]
            balanced[fold.fold_id] = upsample_balance(train, args.seed)
        payload["balanced_train"] = balanced
    text = json.dumps(payload, ensure_ascii=False, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    if args.corpus:
        print(render_frame(corpus_summary(read_manifest(args.path), SEVERITY_THRESHOLDS)))
        return EXIT_OK
    report = read_report(args.path)
    print(render_report(report, metric=args.metric, task=args.task, fold=args.fold))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="paraphasia", description="Paraphasia detection evaluation engine")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="Parse CHAT records into AWER transcripts or a manifest")
    p.add_argument("input", help="TSV records (speaker, body, start_ms, end_ms) or a .cha file")
    p.add_argument("--cha", action="store_true", help="Treat input as a .cha file regardless of suffix")
    p.add_argument("--speaker", default=None, help="Speaker id for .cha input (default: file stem)")
    p.add_argument("--dataset", choices=[d.value for d in Dataset], default=Dataset.PROTOCOL.value)
    p.add_argument("--task", choices=TASK_CHOICES, default=Task.PHN_NEO.slug)
    p.add_argument("--speakers", default=None, help="Speaker metadata TSV (speaker_id, group, wab_aq)")
    p.add_argument("--min-ms", type=int, default=MIN_DURATION_MS)
    p.add_argument("--max-ms", type=int, default=MAX_DURATION_MS)
    p.add_argument("-o", "--output", default=None, help="Write a manifest instead of printing transcripts")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("tokenizer-train", help="Train a unigram subword tokenizer")
    p.add_argument("input", help="Manifest (.jsonl) or plain text, one sentence per line")
    p.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    p.add_argument("--training", choices=["protocol", "scripts", "both"], default="both")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_tokenizer_train)

    p = sub.add_parser("tokenize", help="Segment text with a trained tokenizer")
    p.add_argument("model")
    p.add_argument("text", nargs="*", help="Sentences (default: read stdin)")
    p.add_argument("--ids", action="store_true", help="Print token ids instead of pieces")
    p.set_defaults(func=_cmd_tokenize)

    p = sub.add_parser("decode", help="Decode one posterior grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--scorer", default=None, help="Table scorer; without it the grid is decoded greedily")
    p.add_argument("--ctc-weight", type=float, default=DEFAULT_CTC_WEIGHT)
    p.add_argument("--beam-size", type=int, default=DEFAULT_BEAM_SIZE)
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("eval", help="Run an experiment config and write the report")
    p.add_argument("--config", required=True)
    p.add_argument("--task", choices=TASK_CHOICES, default=None)
    p.add_argument("--window", type=int, action="append", default=None, help="TTR window (repeatable)")
    p.add_argument("--vocab-size", type=int, action="append", default=None, help="Tokenizer sweep size (repeatable)")
    p.add_argument("--ctc-weight", type=float, action="append", default=None, help="Decode weight (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json"], action="append", default=None)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("folds", help="Build speaker-independent folds")
    p.add_argument("manifest")
    p.add_argument("--scheme", choices=["loso", "protocol"], default="loso")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--balance", action="store_true", help="Add upsampled training lists")
    p.add_argument("--task", choices=TASK_CHOICES, default=Task.PHN_NEO.slug)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_folds)

    p = sub.add_parser("report", help="Print a saved report (or a corpus summary) as a table")
    p.add_argument("path", help="report.csv / report.json, or a manifest with --corpus")
    p.add_argument("--metric", default=None)
    p.add_argument("--task", choices=TASK_CHOICES, default=None)
    p.add_argument("--fold", default=None)
    p.add_argument("--corpus", action="store_true", help="Summarize a manifest by dataset and severity")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except jsonschema.ValidationError as exc:
        print(f"error: schema validation failed: {exc.message}", file=sys.stderr)
    except pydantic.ValidationError as exc:
        print(f"error: invalid record: {exc.error_count()} validation error(s); {exc.errors()[0]['msg']}",
              file=sys.stderr)
    except (ParaphasiaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
