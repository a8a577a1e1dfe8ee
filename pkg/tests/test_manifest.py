"""Tests for manifest, prediction and speaker-table I/O."""
from __future__ import annotations

import json

import jsonschema
import pydantic
import pytest

from paraphasia.corpus.manifest import (
    manifest_lines,
    read_manifest,
    read_predictions,
    read_speaker_table,
    utterances_from_chat,
    write_manifest,
    write_predictions,
)
from paraphasia.errors import MalformedAnnotation, SchemaVersionMismatch
from paraphasia.ingest.chat import filter_utterances, parse_chat_utterance, read_chat_records
from paraphasia.labels import AwerTranscript
from paraphasia.models import Dataset, ParaphasiaClass, SpeakerGroup


def _write_lines(path, objs):
    path.write_text("\n".join(json.dumps(o) for o in objs) + "\n", encoding="utf-8")
    return path


SPEAKER = {"schema_version": 1, "kind": "speaker", "speaker_id": "P1", "group": "aphasia", "wab_aq": 60.0}
UTTERANCE = {
    "schema_version": 1, "kind": "utterance", "utterance_id": "P1-0000", "speaker_id": "P1",
    "words": [{"word": "zut", "cls": "phonemic"}], "start_ms": 0, "end_ms": 1200, "dataset": "protocol",
}


# =====================================================================
# Manifest
# =====================================================================

class TestManifest:
    def test_read_shipped(self, shipped_manifest_path):
        manifest = read_manifest(shipped_manifest_path)
        assert len(manifest.speakers) == 12
        assert len(manifest.utterances) == 36
        utt = next(u for u in manifest.utterances if u.utterance_id == "S02-0002")
        assert [w.word for w in utt.words][:3] == ["i", "have", "efezia"]
        assert utt.words[2].cls is ParaphasiaClass.PHONEMIC
        assert utt.dataset is Dataset.SCRIPTS

    def test_write_read(self, synthetic_manifest, tmp_path):
        path = write_manifest(synthetic_manifest, tmp_path / "m" / "manifest.jsonl")
        loaded = read_manifest(path)
        assert manifest_lines(loaded) == manifest_lines(synthetic_manifest)
        assert loaded.utterances == synthetic_manifest.utterances

    def test_version_mismatch(self, tmp_path):
        path = _write_lines(tmp_path / "m.jsonl", [{**SPEAKER, "schema_version": 2}])
        with pytest.raises(SchemaVersionMismatch):
            read_manifest(path)

    def test_schema_violation(self, tmp_path):
        path = _write_lines(tmp_path / "m.jsonl", [{**SPEAKER, "group": "patient"}])
        with pytest.raises(jsonschema.ValidationError):
            read_manifest(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"schema_version": 1,\n', encoding="utf-8")
        with pytest.raises(MalformedAnnotation):
            read_manifest(path)

    def test_unknown_speaker_reference(self, tmp_path):
        path = _write_lines(tmp_path / "m.jsonl", [UTTERANCE])
        with pytest.raises(pydantic.ValidationError):
            read_manifest(path)

    def test_span_checked(self, tmp_path):
        path = _write_lines(tmp_path / "m.jsonl", [SPEAKER, {**UTTERANCE, "start_ms": 1200}])
        with pytest.raises(pydantic.ValidationError):
            read_manifest(path)


# =====================================================================
# CHAT → manifest
# =====================================================================

class TestUtterancesFromChat:
    def test_ids_and_words(self, synthetic_dir):
        utts = filter_utterances(read_chat_records(synthetic_dir / "sample.tsv"))
        records = utterances_from_chat(utts, Dataset.PROTOCOL)
        assert [r.utterance_id for r in records] == ["PAR-0000", "PAR-0001"]
        assert [w.word for w in records[0].words] == ["i", "have", "efezia"]
        assert records[0].words[2].cls is ParaphasiaClass.NEOLOGISTIC
        stool = next(w for w in records[1].words if w.word == "stool")
        assert stool.cls is ParaphasiaClass.PHONEMIC

    def test_empty_utterance_dropped_but_counted(self):
        utts = [
            parse_chat_utterance("the dog", "P1", 0, 2000),
            parse_chat_utterance(".", "P1", 2000, 4000),
            parse_chat_utterance("a cat", "P1", 4000, 6000),
        ]
        records = utterances_from_chat(utts, Dataset.SCRIPTS)
        assert [r.utterance_id for r in records] == ["P1-0000", "P1-0002"]


# =====================================================================
# Predicted transcripts and speaker tables
# =====================================================================

class TestPredictions:
    def test_read_shipped(self, synthetic_dir):
        predictions = read_predictions(synthetic_dir / "predictions.jsonl")
        assert len(predictions) == 36
        assert str(predictions["S01-0001"]) == "she/0 lost/0 her/0 slipper/1 at/0 midnight/0"

    def test_write_read(self, tmp_path):
        preds = {"b": AwerTranscript.parse("zut/1"), "a": AwerTranscript.parse("i/0 have/0")}
        path = write_predictions(preds, tmp_path / "p.jsonl")
        assert path.read_text(encoding="utf-8").splitlines()[0].startswith('{"awer": "i/0 have/0"')
        assert read_predictions(path) == preds

    def test_duplicate(self, tmp_path):
        line = {"utterance_id": "a", "awer": "dog/0"}
        path = _write_lines(tmp_path / "p.jsonl", [line, line])
        with pytest.raises(MalformedAnnotation):
            read_predictions(path)

    def test_bad_transcript(self, tmp_path):
        path = _write_lines(tmp_path / "p.jsonl", [{"utterance_id": "a", "awer": "dog/2"}])
        with pytest.raises(jsonschema.ValidationError):
            read_predictions(path)


class TestSpeakerTable:
    def test_read_shipped(self, synthetic_dir):
        speakers = {s.speaker_id: s for s in read_speaker_table(synthetic_dir / "speakers.tsv")}
        assert len(speakers) == 12
        assert speakers["S03"].group is SpeakerGroup.CONTROL
        assert speakers["S03"].wab_aq is None
        assert speakers["S01"].wab_aq == pytest.approx(88.2)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "speakers.tsv"
        path.write_text("speaker_id\twab_aq\nP1\t60\n", encoding="utf-8")
        with pytest.raises(MalformedAnnotation):
            read_speaker_table(path)
