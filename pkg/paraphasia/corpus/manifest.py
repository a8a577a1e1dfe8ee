"""Corpus manifest JSONL I/O, CHAT → manifest conversion, and predicted transcripts.

Manifest files hold one JSON object per line: ``kind="speaker"`` lines with
SpeakerMeta fields and ``kind="utterance"`` lines with utterance fields.
Every line carries ``schema_version`` and is validated against
``schemas/corpus.schema.json``.
"""
from __future__ import annotations

import functools
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import jsonschema
import pandas as pd

from paraphasia.config import CORPUS_SCHEMA_PATH, CORPUS_SCHEMA_VERSION, PREDICTIONS_SCHEMA_PATH
from paraphasia.errors import MalformedAnnotation, SchemaVersionMismatch
from paraphasia.ingest.chat import ChatUtterance, classify_error_code, normalize_word
from paraphasia.ingest.phonemap import PhoneMap, resolve_ipa_tokens
from paraphasia.labels import AwerTranscript
from paraphasia.models import (
    CorpusManifest,
    Dataset,
    ManifestWord,
    ParaphasiaClass,
    SpeakerMeta,
    UtteranceRecord,
)

LOG = logging.getLogger(__name__)


@functools.lru_cache(maxsize=4)
def load_schema(path: Union[str, Path]) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _json_lines(path: Union[str, Path]) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedAnnotation(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None


def read_manifest(path: Union[str, Path], schema_path: Union[str, Path] = CORPUS_SCHEMA_PATH) -> CorpusManifest:
    schema = load_schema(schema_path)
    speakers: List[SpeakerMeta] = []
    utterances: List[UtteranceRecord] = []
    for lineno, obj in _json_lines(path):
        version = obj.get("schema_version") if isinstance(obj, dict) else None
        if version != CORPUS_SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"{path}:{lineno}: schema_version {version!r} (expected {CORPUS_SCHEMA_VERSION})"
            )
        jsonschema.validate(instance=obj, schema=schema)
        fields = {k: v for k, v in obj.items() if k not in ("schema_version", "kind")}
        if obj["kind"] == "speaker":
            speakers.append(SpeakerMeta(**fields))
        else:
            utterances.append(UtteranceRecord(**fields))
    manifest = CorpusManifest(utterances=tuple(utterances), speakers=tuple(speakers))
    LOG.info("Loaded manifest %s: %d utterances, %d speakers", path, len(utterances), len(speakers))
    return manifest


def manifest_lines(manifest: CorpusManifest) -> List[str]:
    lines = []
    for spk in sorted(manifest.speakers, key=lambda s: s.speaker_id):
        obj = {"schema_version": CORPUS_SCHEMA_VERSION, "kind": "speaker", **spk.model_dump(mode="json")}
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    for utt in manifest.utterances:
        obj = {"schema_version": CORPUS_SCHEMA_VERSION, "kind": "utterance", **utt.model_dump(mode="json")}
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    return lines


def write_manifest(manifest: CorpusManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(manifest_lines(manifest)) + "\n", encoding="utf-8")
    return path


def read_speaker_table(path: Union[str, Path]) -> List[SpeakerMeta]:
    """Speaker metadata from a TSV with columns ``speaker_id``, ``group`` and optional ``wab_aq``."""
    frame = pd.read_csv(path, sep="\t", dtype={"speaker_id": str, "group": str}, comment="#")
    missing = {"speaker_id", "group"} - set(frame.columns)
    if missing:
        raise MalformedAnnotation(f"{path}: missing speaker columns {sorted(missing)}")
    speakers = []
    for rec in frame.to_dict(orient="records"):
        aq = rec.get("wab_aq")
        speakers.append(SpeakerMeta(
            speaker_id=rec["speaker_id"].strip(),
            group=rec["group"].strip().lower(),
            wab_aq=None if aq is None or pd.isna(aq) else float(aq),
        ))
    return speakers


def utterance_words(
    utt: ChatUtterance,
    code_map: Optional[Dict[str, ParaphasiaClass]] = None,
    phonemap: Optional[PhoneMap] = None,
) -> List[ManifestWord]:
    """Normalized words with their paraphasia classes; IPA forms become pseudo-words."""
    words = []
    for tok in resolve_ipa_tokens(utt.tokens, phonemap):
        word = normalize_word(tok.surface)
        if word:
            words.append(ManifestWord(word=word, cls=classify_error_code(tok.error_code, code_map)))
    return words


def utterances_from_chat(
    utts: Sequence[ChatUtterance],
    dataset: Dataset,
    code_map: Optional[Dict[str, ParaphasiaClass]] = None,
    phonemap: Optional[PhoneMap] = None,
) -> List[UtteranceRecord]:
    """Convert parsed utterances to manifest records with ids ``<speaker>-<nnnn>``."""
    records = []
    counters: Dict[str, int] = {}
    for utt in utts:
        index = counters.get(utt.speaker_id, 0)
        counters[utt.speaker_id] = index + 1
        words = utterance_words(utt, code_map, phonemap)
        if not words:
            LOG.warning("Dropping utterance %s-%04d: no words after normalization", utt.speaker_id, index)
            continue
        records.append(UtteranceRecord(
            utterance_id=f"{utt.speaker_id}-{index:04d}",
            speaker_id=utt.speaker_id,
            words=tuple(words),
            start_ms=utt.start_ms,
            end_ms=utt.end_ms,
            dataset=dataset,
        ))
    return records


def read_predictions(
    path: Union[str, Path],
    schema_path: Union[str, Path] = PREDICTIONS_SCHEMA_PATH,
) -> Dict[str, AwerTranscript]:
    """Externally produced AWER transcripts keyed by utterance id."""
    schema = load_schema(schema_path)
    predictions: Dict[str, AwerTranscript] = {}
    for lineno, obj in _json_lines(path):
        jsonschema.validate(instance=obj, schema=schema)
        utt_id = obj["utterance_id"]
        if utt_id in predictions:
            raise MalformedAnnotation(f"{path}:{lineno}: duplicate prediction for {utt_id!r}")
        predictions[utt_id] = AwerTranscript.parse(obj["awer"])
    LOG.info("Loaded %d predicted transcripts from %s", len(predictions), path)
    return predictions


def write_predictions(predictions: Dict[str, AwerTranscript], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        json.dumps({"utterance_id": utt_id, "awer": str(tr)}, ensure_ascii=False, sort_keys=True)
        for utt_id, tr in sorted(predictions.items())
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


__all__ = [
    "load_schema",
    "manifest_lines",
    "read_manifest",
    "read_predictions",
    "read_speaker_table",
    "utterance_words",
    "utterances_from_chat",
    "write_manifest",
    "write_predictions",
]
