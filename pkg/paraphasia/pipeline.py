"""Experiment runner: manifest → folds → transcripts → metrics → severity report.

The runner is file-based. Every step is appended to ``run_status.json`` in
the output directory (name, status, timestamps, message) so a long run can
be followed from another shell; the report files themselves carry no
timestamps and are byte-identical across runs with equal inputs and seeds.

Two transcript sources are supported:

* ``mode = ingest``: externally produced AWER transcripts (``predictions``).
* ``mode = decode``: per-utterance posterior grids and table scorers are
  decoded with the joint beam search; with several ``ctc_weights`` each
  fold picks its weight on dev (or train when the fold has no dev set).
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import jsonschema
from pydantic import ValidationError
from tqdm import tqdm

from paraphasia.config import BOUNDARY_MARKER, MAX_WORKERS
from paraphasia.corpus.folds import FoldSpec, loso_folds, split_protocol
from paraphasia.corpus.manifest import read_manifest, read_predictions
from paraphasia.decode.search import BeamConfig, beam_search_joint, hypothesis_awer, pick_ctc_weight
from paraphasia.decode.table_scorer import read_table_scorer
from paraphasia.errors import (
    ConfigError,
    EmptyReference,
    EmptyTestFold,
    MalformedAnnotation,
    ParaphasiaError,
    VocabTooLarge,
)
from paraphasia.labels import AwerTranscript, binarize_labels, build_awer_transcript, propagate_to_subwords
from paraphasia.metrics.alignment import align_edit
from paraphasia.metrics.detection import (
    F1Counts,
    TtrConfig,
    TtrCounts,
    temporal_distance,
    time_tolerant_recall,
    utterance_f1,
)
from paraphasia.metrics.severity import OVERALL, ErrorCounts, MeanValue, severity_report
from paraphasia.models import CorpusManifest, Dataset, ExperimentConfig, UtteranceRecord
from paraphasia.report import EvalReport, ReportRow, write_report
from paraphasia.scoring.grid import grid_path, read_grid
from paraphasia.subword.unigram import TokenizerModel, load_model, tokens_per_word, train_unigram

LOG = logging.getLogger(__name__)

STATUS_FILE = "run_status.json"
SCORER_SUFFIX = ".scorer"

_LIST_KEYS = frozenset({"windows", "vocab_sweep", "ctc_weights", "formats", "severity_thresholds"})
_PATH_KEYS = ("manifest", "output_dir", "predictions", "grids_dir", "scorer_dir", "tokenizer")


# ---------------------------------------------------------------------------
# Configuration files
# ---------------------------------------------------------------------------

def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Raw ``key = value`` pairs; list-valued keys are split on commas."""
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key = key.strip().replace("-", "_")
        if key not in ExperimentConfig.model_fields:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate config key {key!r}")
        value = value.strip()
        values[key] = [v.strip() for v in value.split(",") if v.strip()] if key in _LIST_KEYS else value
    return values


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err.get("loc", ())) or "config"
        parts.append(f"{loc}: {err.get('msg', 'invalid value')}")
    return "; ".join(parts)


def build_config(values: Mapping[str, Any], base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Validate raw values into an :class:`ExperimentConfig`.

    Relative paths are resolved against *base_dir* (the config file's
    directory) when given.
    """
    resolved = dict(values)
    if base_dir is not None:
        for key in _PATH_KEYS:
            value = resolved.get(key)
            if value not in (None, "") and not Path(value).is_absolute():
                resolved[key] = base_dir / value
    try:
        return ExperimentConfig(**resolved)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {_format_validation_error(exc)}") from None


def load_config_file(path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Read a config file and apply non-``None`` *overrides* (CLI flags) on top."""
    path = Path(path)
    values = parse_config_text(path.read_text(encoding="utf-8"), str(path))
    base_dir = path.resolve().parent
    for key in _PATH_KEYS:
        if values.get(key) and not Path(values[key]).is_absolute():
            values[key] = base_dir / values[key]
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in ExperimentConfig.model_fields:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = value
    LOG.debug("Config %s: %s", path, sorted(values))
    return build_config(values)


def config_summary(cfg: ExperimentConfig) -> Dict[str, Any]:
    """JSON-safe config snapshot embedded in the JSON report."""
    return json.loads(cfg.model_dump_json())


# ---------------------------------------------------------------------------
# Per-utterance scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UtteranceScores:
    utterance_id: str
    speaker_id: str
    wer: ErrorCounts
    awer: ErrorCounts
    td: MeanValue
    ttc: MeanValue
    ctt: MeanValue
    ttr: Dict[int, TtrCounts]
    f1: F1Counts


def score_utterance(
    utterance_id: str,
    speaker_id: str,
    reference: AwerTranscript,
    hypothesis: AwerTranscript,
    windows: Sequence[int],
) -> UtteranceScores:
    """Every metric for one reference/hypothesis pair, as poolable counts."""
    if not len(reference):
        raise EmptyReference(f"utterance {utterance_id!r} has an empty reference")
    n_ref = len(reference)
    wer_cost = align_edit(reference.words, hypothesis.words).cost
    awer_cost = align_edit(reference.composite(), hypothesis.composite()).cost
    dist = temporal_distance(reference.labels, hypothesis.labels)
    flag_ref = int(any(reference.labels))
    flag_hyp = int(any(hypothesis.labels))
    return UtteranceScores(
        utterance_id=utterance_id,
        speaker_id=speaker_id,
        wer=ErrorCounts(wer_cost, n_ref),
        awer=ErrorCounts(awer_cost, n_ref),
        td=MeanValue(float(dist.td), 1),
        ttc=MeanValue(float(dist.ttc), 1),
        ctt=MeanValue(float(dist.ctt), 1),
        ttr={w: time_tolerant_recall(reference.labels, hypothesis.labels, TtrConfig(w)) for w in windows},
        f1=utterance_f1([flag_ref], [flag_hyp]),
    )


def _metric_series(windows: Sequence[int]):
    """(metric name, window, getter) in report order."""
    series: List[Tuple[str, Optional[int], Callable[[UtteranceScores], Any]]] = [
        ("wer", None, lambda s: s.wer),
        ("awer", None, lambda s: s.awer),
        ("td", None, lambda s: s.td),
        ("ttc", None, lambda s: s.ttc),
        ("ctt", None, lambda s: s.ctt),
    ]
    for w in windows:
        series.append(("ttr", w, lambda s, w=w: s.ttr[w]))
    series.append(("f1_avg", None, lambda s: s.f1))
    series.append(("f1_pos", None, lambda s: s.f1))
    series.append(("f1_neg", None, lambda s: s.f1))
    return series


def _metric_value(metric: str, pooled: Any) -> Optional[float]:
    if metric == "f1_pos":
        return pooled.f1_pos
    if metric == "f1_neg":
        return pooled.f1_neg
    return pooled.value


def filter_records(
    utts: Sequence[UtteranceRecord],
    min_ms: int,
    max_ms: int,
    dataset: Optional[Dataset] = None,
) -> List[UtteranceRecord]:
    """Keep manifest utterances inside the duration range (and dataset, if given)."""
    kept = [
        u for u in utts
        if min_ms <= u.duration_ms <= max_ms and (dataset is None or u.dataset is dataset)
    ]
    if len(kept) != len(utts):
        LOG.warning("Filtered out %d of %d utterances (duration/dataset)", len(utts) - len(kept), len(utts))
    return kept


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

@dataclass
class RunState:
    """Mutable run record mirrored to ``run_status.json``."""
    status: str = "queued"
    created_at: str = field(default_factory=_now_iso)
    current_step: Optional[str] = None
    steps: List[Dict[str, Any]] = field(default_factory=list)
    artifacts: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None


class EvaluationRunner:
    """Run one experiment config and persist step status next to the report."""

    def __init__(self, cfg: ExperimentConfig, max_workers: int = MAX_WORKERS):
        self.cfg = cfg
        self.max_workers = max(1, max_workers)
        self.output_dir = Path(cfg.output_dir)
        self.state = RunState()

    # -- status file -------------------------------------------------------

    @property
    def status_path(self) -> Path:
        return self.output_dir / STATUS_FILE

    def _write_status(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "status": self.state.status,
            "created_at": self.state.created_at,
            "current_step": self.state.current_step,
            "task": self.cfg.task.slug,
            "steps": self.state.steps,
            "artifacts": self.state.artifacts,
            "error": self.state.error,
        }
        with open(self.status_path, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2)

    def _start_step(self, name: str) -> Dict[str, Any]:
        step = {"name": name, "status": "running", "started_at": _now_iso(), "finished_at": None, "message": None}
        self.state.steps.append(step)
        self.state.current_step = name
        self.state.status = "running"
        self._write_status()
        LOG.info("Step %s started", name)
        return step

    def _finish_step(self, step: Dict[str, Any], ok: bool = True, message: Optional[str] = None) -> None:
        step["finished_at"] = _now_iso()
        step["status"] = "done" if ok else "failed"
        step["message"] = message
        if not ok:
            self.state.status = "failed"
            self.state.error = message
        self._write_status()

    # -- main entry ----------------------------------------------------------

    def run(self) -> EvalReport:
        """Execute every step; on failure the status file records it and no report is written."""
        step: Optional[Dict[str, Any]] = None
        try:
            step = self._start_step("load_manifest")
            manifest, utts = self._load_manifest()
            self._finish_step(step, message=f"{len(utts)} utterances")

            step = self._start_step("build_folds")
            folds = self._build_folds(manifest, utts)
            self._finish_step(step, message=f"{len(folds)} folds")

            references = {u.utterance_id: build_awer_transcript(binarize_labels(u.words, self.cfg.task))
                          for u in utts}

            step = self._start_step("transcripts")
            if self.cfg.mode == "ingest":
                hypotheses = self._ingest_predictions(folds, utts)
                weights: Dict[str, Optional[float]] = {f.fold_id: None for f in folds}
            else:
                hypotheses, weights, dev_rows = self._decode(folds, utts, references)
            self._finish_step(step, message=self.cfg.mode)

            step = self._start_step("score")
            report = EvalReport()
            report.extend(self._score_rows(folds, utts, references, hypotheses, weights, manifest))
            if self.cfg.mode == "decode":
                report.extend(dev_rows)
            self._finish_step(step, message=f"{len(report.rows)} rows")

            if self.cfg.vocab_sweep or self.cfg.tokenizer is not None:
                step = self._start_step("tokenizer_sweep")
                report.extend(self._tokenizer_rows(folds, utts))
                self._finish_step(step)

            step = self._start_step("write_report")
            paths = write_report(report, self.output_dir, self.cfg.formats, config_summary(self.cfg))
            self.state.artifacts["reports"] = [str(p) for p in paths]
            self._finish_step(step)
        except (ParaphasiaError, OSError, jsonschema.ValidationError) as exc:
            if step is not None and step["status"] == "running":
                self._finish_step(step, ok=False, message=str(exc))
            LOG.error("Evaluation failed: %s", exc)
            raise

        self.state.status = "done"
        self.state.current_step = None
        self._write_status()
        return report

    # -- steps -----------------------------------------------------------------

    def _load_manifest(self) -> Tuple[CorpusManifest, List[UtteranceRecord]]:
        manifest = read_manifest(self.cfg.manifest)
        utts = filter_records(manifest.utterances, self.cfg.min_duration_ms, self.cfg.max_duration_ms,
                              self.cfg.dataset)
        return manifest, utts

    def _build_folds(self, manifest: CorpusManifest, utts: Sequence[UtteranceRecord]) -> List[FoldSpec]:
        folds = loso_folds(manifest) if self.cfg.folds == "loso" else [split_protocol(manifest, self.cfg.seed)]
        with_utts = {u.speaker_id for u in utts}
        for fold in folds:
            if not fold.test & with_utts:
                raise EmptyTestFold(f"fold {fold.fold_id}: no test utterances after filtering")
        return folds

    def _ingest_predictions(
        self, folds: Sequence[FoldSpec], utts: Sequence[UtteranceRecord]
    ) -> Dict[str, AwerTranscript]:
        if self.cfg.predictions is None:
            raise ConfigError("mode=ingest requires 'predictions'")
        predictions = read_predictions(self.cfg.predictions)
        tested = set().union(*(f.test for f in folds))
        missing = sorted(u.utterance_id for u in utts if u.speaker_id in tested and u.utterance_id not in predictions)
        if missing:
            raise MalformedAnnotation(f"no predicted transcript for {len(missing)} utterances, e.g. {missing[0]!r}")
        return predictions

    def _decode_one(self, utt: UtteranceRecord) -> Dict[float, AwerTranscript]:
        assert self.cfg.grids_dir is not None and self.cfg.scorer_dir is not None
        grid = read_grid(grid_path(self.cfg.grids_dir, utt.utterance_id))
        scorer = read_table_scorer(grid_path(self.cfg.scorer_dir, utt.utterance_id, SCORER_SUFFIX))
        out = {}
        for weight in self.cfg.ctc_weights:
            beam = BeamConfig(beam_size=self.cfg.beam_size, ctc_weight=weight, max_len=self.cfg.max_len)
            hyp = beam_search_joint(utt.utterance_id, grid, scorer, beam)
            out[weight] = hypothesis_awer(grid, hyp, BOUNDARY_MARKER)
        LOG.debug("Decoded %s at %d weights", utt.utterance_id, len(out))
        return out

    def _decode(
        self,
        folds: Sequence[FoldSpec],
        utts: Sequence[UtteranceRecord],
        references: Mapping[str, AwerTranscript],
    ) -> Tuple[Dict[str, AwerTranscript], Dict[str, Optional[float]], List[ReportRow]]:
        """Decode every needed utterance once per weight, then pick a weight per fold."""
        sweeping = len(self.cfg.ctc_weights) > 1
        needed = set().union(*(f.test for f in folds))
        if sweeping:
            for fold in folds:
                needed |= fold.dev or fold.train
        todo = [u for u in utts if u.speaker_id in needed]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            decoded = dict(zip((u.utterance_id for u in todo), pool.map(self._decode_one, todo)))
        LOG.info("Decoded %d utterances at weights %s", len(todo), self.cfg.ctc_weights)

        hypotheses: Dict[str, AwerTranscript] = {}
        chosen: Dict[str, Optional[float]] = {}
        dev_rows: List[ReportRow] = []
        task = self.cfg.task.slug
        for fold in folds:
            weight = self.cfg.ctc_weights[0]
            if sweeping:
                tune = fold.dev or fold.train
                tune_utts = [u for u in utts if u.speaker_id in tune]
                if tune_utts:
                    wer_by_weight: Dict[float, float] = {}
                    for w in self.cfg.ctc_weights:
                        pooled = ErrorCounts()
                        for u in tune_utts:
                            ref = references[u.utterance_id]
                            pooled = pooled + ErrorCounts(align_edit(ref.words, decoded[u.utterance_id][w].words).cost,
                                                          len(ref))
                        wer_by_weight[w] = pooled.value if pooled.value is not None else 0.0
                        dev_rows.append(ReportRow(task=task, fold=fold.fold_id, bucket=OVERALL, metric="dev_wer",
                                                  ctc_weight=w, value=pooled.value, n_utterances=len(tune_utts)))
                    weight = pick_ctc_weight(wer_by_weight)
                else:
                    LOG.warning("Fold %s has no tuning utterances; using ctc_weight=%.2f", fold.fold_id, weight)
            chosen[fold.fold_id] = weight
            LOG.info("Fold %s: ctc_weight=%.2f", fold.fold_id, weight)
            for u in utts:
                if u.speaker_id in fold.test:
                    hypotheses[u.utterance_id] = decoded[u.utterance_id][weight]
        return hypotheses, chosen, dev_rows

    def _score_rows(
        self,
        folds: Sequence[FoldSpec],
        utts: Sequence[UtteranceRecord],
        references: Mapping[str, AwerTranscript],
        hypotheses: Mapping[str, AwerTranscript],
        weights: Mapping[str, Optional[float]],
        manifest: CorpusManifest,
    ) -> List[ReportRow]:
        windows = list(self.cfg.windows)
        task = self.cfg.task.slug
        meta = manifest.speaker_map()
        rows: List[ReportRow] = []
        pooled_scores: List[UtteranceScores] = []
        for fold in folds:
            scores = [
                score_utterance(u.utterance_id, u.speaker_id, references[u.utterance_id],
                                hypotheses[u.utterance_id], windows)
                for u in utts if u.speaker_id in fold.test
            ]
            pooled_scores.extend(scores)
            rows.extend(self._bucket_rows(task, fold.fold_id, scores, windows, meta, weights.get(fold.fold_id)))
        rows.extend(self._bucket_rows(task, OVERALL, pooled_scores, windows, meta, None))
        return rows

    def _bucket_rows(
        self,
        task: str,
        fold_id: str,
        scores: Sequence[UtteranceScores],
        windows: Sequence[int],
        meta: Mapping,
        ctc_weight: Optional[float],
    ) -> List[ReportRow]:
        rows: List[ReportRow] = []
        counts_by_bucket = severity_report([(s.speaker_id, 1) for s in scores], meta,
                                           self.cfg.severity_thresholds, include_overall=True)
        for metric, window, getter in _metric_series(windows):
            pooled = severity_report([(s.speaker_id, getter(s)) for s in scores], meta,
                                     self.cfg.severity_thresholds, include_overall=True)
            for bucket, value in pooled.items():
                rows.append(ReportRow(
                    task=task, fold=fold_id, bucket=bucket, metric=metric, window=window,
                    ctc_weight=ctc_weight, value=_metric_value(metric, value),
                    n_utterances=counts_by_bucket[bucket],
                ))
        return rows

    def _tokenizer_rows(self, folds: Sequence[FoldSpec], utts: Sequence[UtteranceRecord]) -> List[ReportRow]:
        """tokens_per_word and subword_paraphasia_rate on test words per tokenizer."""
        training = self.cfg.tokenizer_training
        corpus = [
            " ".join(w.word for w in u.words)
            for u in utts if training == "both" or u.dataset.value == training
        ]
        tested = set().union(*(f.test for f in folds))
        test_utts = [u for u in utts if u.speaker_id in tested]
        test_words = [w for u in test_utts for w in binarize_labels(u.words, self.cfg.task)]

        models: List[Tuple[int, Optional[TokenizerModel]]] = []
        if self.cfg.tokenizer is not None:
            loaded = load_model(self.cfg.tokenizer)
            models.append((loaded.vocab_size, loaded))
        for size in tqdm(self.cfg.vocab_sweep, desc="vocab sweep", unit="size", disable=None):
            try:
                models.append((size, train_unigram(corpus, size)))
            except VocabTooLarge as exc:
                LOG.warning("vocab %d: %s; rows left undefined", size, exc)
                models.append((size, None))

        rows = []
        task = self.cfg.task.slug
        for size, model in models:
            if model is None:
                for metric in ("tokens_per_word", "subword_paraphasia_rate"):
                    rows.append(ReportRow(task=task, fold=OVERALL, bucket=OVERALL, metric=metric,
                                          vocab_size=size, value=None, n_utterances=len(test_utts)))
                continue
            known = set(model.pieces)
            words = [w for w in test_words if all(ch in known for ch in w.word)]
            if len(words) != len(test_words):
                LOG.warning("vocab %d: skipped %d test words with untrained characters",
                            model.vocab_size, len(test_words) - len(words))
            pairs = propagate_to_subwords(words, model)
            rate = sum(label for _, label in pairs) / len(pairs) if pairs else None
            per_word = tokens_per_word(model, [w.word for w in words]) if words else None
            for metric, value in (("tokens_per_word", per_word), ("subword_paraphasia_rate", rate)):
                rows.append(ReportRow(task=task, fold=OVERALL, bucket=OVERALL, metric=metric,
                                      vocab_size=model.vocab_size, value=value, n_utterances=len(test_utts)))
            LOG.info("vocab %d: %.3f tokens/word", model.vocab_size, per_word or 0.0)
        return rows


def run_evaluation(cfg: ExperimentConfig, max_workers: int = MAX_WORKERS) -> EvalReport:
    return EvaluationRunner(cfg, max_workers=max_workers).run()


__all__ = [
    "EvaluationRunner",
    "UtteranceScores",
    "build_config",
    "config_summary",
    "filter_records",
    "load_config_file",
    "parse_config_text",
    "run_evaluation",
    "score_utterance",
]
