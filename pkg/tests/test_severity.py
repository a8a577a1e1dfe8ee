"""Tests for severity buckets and corpus aggregation."""
from __future__ import annotations

import pytest

from paraphasia.errors import MissingSpeakerMeta
from paraphasia.metrics.detection import F1Counts, TtrCounts
from paraphasia.metrics.severity import (
    OVERALL,
    ErrorCounts,
    MeanValue,
    corpus_summary,
    severity_bucket,
    severity_report,
)
from paraphasia.models import SpeakerGroup, SpeakerMeta


def _aphasia(speaker_id: str, aq: float) -> SpeakerMeta:
    return SpeakerMeta(speaker_id=speaker_id, group=SpeakerGroup.APHASIA, wab_aq=aq)


# =====================================================================
# Buckets
# =====================================================================

class TestSeverityBucket:
    @pytest.mark.parametrize("aq,bucket", [
        (80, "mild"),
        (60, "moderate"),
        (40, "severe"),
        (20, "very severe"),
        (75, "moderate"),
        (25, "very severe"),
    ])
    def test_default_thresholds(self, aq, bucket):
        assert severity_bucket(_aphasia("P1", aq)) == bucket

    def test_control(self):
        assert severity_bucket(SpeakerMeta(speaker_id="C1", group=SpeakerGroup.CONTROL)) == "control"

    def test_custom_thresholds(self):
        assert severity_bucket(_aphasia("P1", 80), thresholds=(90, 70, 30)) == "moderate"

    def test_missing_aq(self):
        with pytest.raises(MissingSpeakerMeta):
            severity_bucket(SpeakerMeta(speaker_id="P1", group=SpeakerGroup.APHASIA))


# =====================================================================
# severity_report
# =====================================================================

class TestSeverityReport:
    def test_micro_averaged_errors(self):
        meta = [_aphasia("P1", 80), _aphasia("P2", 90)]
        report = severity_report([("P1", ErrorCounts(10, 100)), ("P2", ErrorCounts(20, 100))], meta)
        assert report["mild"].value == pytest.approx(0.15)

    def test_single_speaker_bucket_keeps_value(self):
        report = severity_report([("P1", ErrorCounts(3, 12))], [_aphasia("P1", 40)])
        assert report == {"severe": ErrorCounts(3, 12)}

    def test_bucket_order_and_overall(self):
        meta = {
            "C1": SpeakerMeta(speaker_id="C1", group=SpeakerGroup.CONTROL),
            "P1": _aphasia("P1", 20),
            "P2": _aphasia("P2", 80),
        }
        per_utt = [("P1", TtrCounts(1, 1)), ("C1", TtrCounts(0, 0)), ("P2", TtrCounts(2, 0))]
        report = severity_report(per_utt, meta, include_overall=True)
        assert list(report) == ["control", "mild", "very severe", OVERALL]
        assert report[OVERALL] == TtrCounts(3, 1)
        assert report["control"].value is None

    def test_f1_pools_confusion_counts(self):
        meta = [_aphasia("P1", 60), _aphasia("P2", 55)]
        report = severity_report([("P1", F1Counts(tp=1)), ("P2", F1Counts(fn=1))], meta)
        assert report["moderate"] == F1Counts(tp=1, fn=1)

    def test_mean_value(self):
        pooled = MeanValue(4.0, 1) + MeanValue(2.0, 1)
        assert pooled.value == 3.0
        assert MeanValue().value is None

    def test_unknown_speaker(self):
        with pytest.raises(MissingSpeakerMeta):
            severity_report([("P9", ErrorCounts(1, 1))], [_aphasia("P1", 60)])


# =====================================================================
# corpus_summary
# =====================================================================

class TestCorpusSummary:
    def test_counts(self, synthetic_manifest):
        summary = corpus_summary(synthetic_manifest)
        assert list(summary.columns) == [
            "dataset", "bucket", "speakers", "utterances", "hours", "words", "paraphasia_pct",
        ]
        assert summary["utterances"].sum() == len(synthetic_manifest.utterances)
        control = summary[(summary["dataset"] == "protocol") & (summary["bucket"] == "control")]
        assert control["speakers"].item() == 4
        assert control["utterances"].item() == 12
        assert control["paraphasia_pct"].item() == 0.0

    def test_clinical_order(self, synthetic_manifest):
        buckets = corpus_summary(synthetic_manifest).query("dataset == 'protocol'")["bucket"].tolist()
        assert buckets == ["control", "mild", "moderate", "severe", "very severe"]
