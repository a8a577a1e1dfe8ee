"""Tests for config loading, per-utterance scoring and the evaluation runner."""
from __future__ import annotations

import json
import logging

import pytest

from paraphasia.corpus.manifest import write_manifest
from paraphasia.corpus.synthetic import synthetic_corpus, write_decode_fixtures
from paraphasia.errors import ConfigError, EmptyReference, EmptyTestFold
from paraphasia.labels import AwerTranscript
from paraphasia.metrics.detection import F1Counts, TtrCounts
from paraphasia.metrics.severity import ErrorCounts
from paraphasia.models import Dataset, Task
from paraphasia.pipeline import (
    EvaluationRunner,
    build_config,
    filter_records,
    load_config_file,
    parse_config_text,
    run_evaluation,
    score_utterance,
)
from paraphasia.report import read_report
from tests.conftest import SYNTHETIC_DIR

STEPS = ["load_manifest", "build_folds", "transcripts", "score", "tokenizer_sweep", "write_report"]


@pytest.fixture
def eval_config(synthetic_dir, tmp_path):
    return load_config_file(synthetic_dir / "eval.conf", {"output_dir": tmp_path / "out"})


@pytest.fixture(scope="module")
def ingest_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ingest")
    cfg = load_config_file(SYNTHETIC_DIR / "eval.conf", {"output_dir": out})
    return cfg, run_evaluation(cfg, max_workers=1)


# =====================================================================
# Config files
# =====================================================================

class TestConfigParsing:
    def test_lists_comments_and_dashes(self):
        values = parse_config_text("windows = 0, 1  # tolerance\n\nctc-weights = 0.2,0.3\nseed=3\n")
        assert values == {"windows": ["0", "1"], "ctc_weights": ["0.2", "0.3"], "seed": "3"}

    @pytest.mark.parametrize("text", ["colour = red\n", "seed = 1\nseed = 2\n", "just words\n"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_build_resolves_relative_paths(self, tmp_path):
        cfg = build_config({"manifest": "m.jsonl", "predictions": "p.jsonl", "windows": ["2", "0"]}, tmp_path)
        assert cfg.manifest == tmp_path / "m.jsonl"
        assert cfg.windows == [0, 2]
        assert cfg.task is Task.PHN_NEO

    @pytest.mark.parametrize("values", [
        {"manifest": "m.jsonl"},
        {"manifest": "m.jsonl", "mode": "decode", "grids_dir": "g"},
        {"manifest": "m.jsonl", "predictions": "p", "ctc_weights": ["1.5"]},
        {"manifest": "m.jsonl", "predictions": "p", "severity_thresholds": ["25", "50", "75"]},
        {"manifest": "m.jsonl", "predictions": "p", "min_duration_ms": "900", "max_duration_ms": "800"},
    ])
    def test_invalid_values(self, values):
        with pytest.raises(ConfigError):
            build_config(values)

    def test_load_shipped_config(self, eval_config, synthetic_dir, tmp_path):
        assert eval_config.manifest == synthetic_dir / "manifest.jsonl"
        assert eval_config.output_dir == tmp_path / "out"
        assert eval_config.windows == [0, 1, 2]
        assert eval_config.vocab_sweep == [40, 60]

    def test_unknown_override(self, synthetic_dir):
        with pytest.raises(ConfigError):
            load_config_file(synthetic_dir / "eval.conf", {"colour": "red"})


# =====================================================================
# Per-utterance scores
# =====================================================================

class TestScoreUtterance:
    def test_misaligned_neologism(self):
        ref = AwerTranscript.parse("i/0 have/0 efezia/1")
        hyp = AwerTranscript.parse("i/0 have/0 of/0 ease/1 ya/0")
        scores = score_utterance("u1", "P1", ref, hyp, [0, 1])
        assert scores.wer == ErrorCounts(3, 3)
        assert scores.awer == ErrorCounts(3, 3)
        assert (scores.ttc.total, scores.ctt.total, scores.td.total) == (1.0, 1.0, 2.0)
        assert scores.ttr == {0: TtrCounts(0, 1), 1: TtrCounts(1, 0)}
        assert scores.f1 == F1Counts(tp=1)

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            score_utterance("u1", "P1", AwerTranscript(), AwerTranscript.parse("a/0"), [0])

    def test_filter_records(self, synthetic_manifest):
        scripts = filter_records(synthetic_manifest.utterances, 0, 10**6, Dataset.SCRIPTS)
        assert scripts and all(u.dataset is Dataset.SCRIPTS for u in scripts)
        assert filter_records(synthetic_manifest.utterances, 0, 1) == []


# =====================================================================
# Ingest runs
# =====================================================================

class TestIngestRun:
    def test_one_ttr_row_per_window(self, ingest_run):
        _, report = ingest_run
        rows = [r for r in report.select(metric="ttr", fold="all") if r.bucket == "all"]
        assert [r.window for r in rows] == [0, 1, 2]
        values = [r.value for r in rows]
        assert values == sorted(values)

    def test_one_row_per_vocab_size(self, ingest_run):
        _, report = ingest_run
        rows = report.select(metric="tokens_per_word")
        assert [r.vocab_size for r in rows] == [40, 60]
        assert rows[1].value <= rows[0].value

    def test_vocab_sweep_past_seed_size(self, synthetic_dir, tmp_path, caplog):
        cfg = load_config_file(synthetic_dir / "eval.conf", {
            "output_dir": tmp_path, "vocab_sweep": [100, 500, 1000, 2000], "formats": ["csv"],
        })
        with caplog.at_level(logging.WARNING, logger="paraphasia.pipeline"):
            report = run_evaluation(cfg, max_workers=1)
        rows = report.select(metric="tokens_per_word")
        assert [r.vocab_size for r in rows] == [100, 500, 1000, 2000]
        assert rows[0].value is not None
        assert [r.value for r in rows[1:]] == [None, None, None]
        rates = report.select(metric="subword_paraphasia_rate")
        assert [r.vocab_size for r in rates] == [100, 500, 1000, 2000]
        assert rates[-1].value is None
        assert any("seed vocabulary" in r.getMessage() for r in caplog.records)
        status = json.loads((tmp_path / "run_status.json").read_text(encoding="utf-8"))
        assert status["status"] == "done"

    def test_pooled_row_counts_every_utterance(self, ingest_run):
        _, report = ingest_run
        row = next(r for r in report.select(metric="wer", fold="all") if r.bucket == "all")
        assert row.n_utterances == 36
        assert row.task == "phn-neo"

    def test_loso_folds_and_buckets(self, ingest_run):
        _, report = ingest_run
        folds = {r.fold for r in report.select(metric="awer")}
        assert folds == {f"S{i:02d}" for i in range(1, 13)} | {"all"}
        buckets = [r.bucket for r in report.select(metric="awer", fold="all")]
        assert buckets == ["control", "mild", "moderate", "severe", "very severe", "all"]

    def test_written_reports(self, ingest_run):
        cfg, report = ingest_run
        out = cfg.output_dir
        csv_rows = read_report(out / "report.csv").rows
        json_rows = read_report(out / "report.json").rows
        assert len(csv_rows) == len(json_rows) == len(report.rows)
        for a, b in zip(csv_rows, json_rows):
            assert (a.metric, a.fold, a.bucket, a.window, a.vocab_size) == (b.metric, b.fold, b.bucket, b.window, b.vocab_size)
            assert (a.value is None) == (b.value is None)
            if a.value is not None:
                assert a.value == pytest.approx(b.value, abs=1e-6)
        payload = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert payload["config"]["task"] == "phn+neo"

    def test_status_file(self, ingest_run):
        cfg, _ = ingest_run
        status = json.loads((cfg.output_dir / "run_status.json").read_text(encoding="utf-8"))
        assert status["status"] == "done"
        assert [s["name"] for s in status["steps"]] == STEPS
        assert all(s["status"] == "done" for s in status["steps"])

    def test_csv_is_reproducible(self, ingest_run, synthetic_dir, tmp_path):
        cfg, _ = ingest_run
        again = load_config_file(synthetic_dir / "eval.conf", {"output_dir": tmp_path})
        run_evaluation(again, max_workers=1)
        assert (tmp_path / "report.csv").read_bytes() == (cfg.output_dir / "report.csv").read_bytes()

    def test_task_changes_labels(self, synthetic_dir, tmp_path):
        cfg = load_config_file(synthetic_dir / "eval.conf", {
            "output_dir": tmp_path, "task": "neo", "vocab_sweep": [], "formats": ["csv"],
        })
        report = run_evaluation(cfg, max_workers=1)
        assert {r.task for r in report.rows} == {"neo"}
        assert not (tmp_path / "report.json").exists()

    def test_empty_test_fold(self, synthetic_dir, tmp_path):
        cfg = load_config_file(synthetic_dir / "eval.conf", {
            "output_dir": tmp_path, "min_duration_ms": 0, "max_duration_ms": 1,
        })
        runner = EvaluationRunner(cfg, max_workers=1)
        with pytest.raises(EmptyTestFold):
            runner.run()
        assert not (tmp_path / "report.csv").exists()
        status = json.loads(runner.status_path.read_text(encoding="utf-8"))
        assert status["status"] == "failed"
        assert status["steps"][-1]["name"] == "build_folds"
        assert status["steps"][-1]["status"] == "failed"


# =====================================================================
# Decode runs
# =====================================================================

class TestDecodeRun:
    def test_protocol_split_with_weight_sweep(self, tmp_path):
        manifest = synthetic_corpus(n_speakers=10, utts_per_speaker=2, seed=0)
        write_manifest(manifest, tmp_path / "manifest.jsonl")
        write_decode_fixtures(manifest, tmp_path / "grids", tmp_path / "scorers", seed=0)
        cfg = build_config({
            "manifest": "manifest.jsonl",
            "mode": "decode",
            "grids_dir": "grids",
            "scorer_dir": "scorers",
            "output_dir": "out",
            "folds": "protocol",
            "ctc_weights": ["0.3", "0.2"],
            "windows": ["0", "1"],
            "beam_size": "4",
            "max_len": "20",
            "formats": ["csv"],
        }, base_dir=tmp_path)
        report = run_evaluation(cfg, max_workers=2)

        dev_rows = report.select(metric="dev_wer")
        assert [r.ctc_weight for r in dev_rows] == [0.2, 0.3]
        assert all(r.n_utterances == 2 for r in dev_rows)

        fold_rows = report.select(metric="wer", fold="split-seed0")
        assert fold_rows and {r.ctc_weight for r in fold_rows} <= {0.2, 0.3}
        assert all(r.ctc_weight is None for r in report.select(metric="wer", fold="all"))

        overall = next(r for r in report.select(metric="wer", fold="all") if r.bucket == "all")
        assert overall.n_utterances == 4
        assert overall.value < 0.2
        assert (tmp_path / "out" / "report.csv").exists()
