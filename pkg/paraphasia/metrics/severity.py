"""Severity bucketing and corpus-level aggregation of per-utterance metrics."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Protocol, Sequence, Tuple, TypeVar, Union

import pandas as pd

from paraphasia.config import SEVERITY_THRESHOLDS
from paraphasia.errors import MissingSpeakerMeta
from paraphasia.models import CorpusManifest, ParaphasiaClass, SpeakerGroup, SpeakerMeta

LOG = logging.getLogger(__name__)

CONTROL = "control"
SEVERITY_BUCKETS = ("mild", "moderate", "severe", "very severe")
BUCKET_ORDER = (CONTROL,) + SEVERITY_BUCKETS
OVERALL = "all"


class Aggregatable(Protocol):
    """Per-utterance counts that pool by addition."""

    @property
    def value(self) -> Optional[float]: ...

    def __add__(self, other): ...


A = TypeVar("A", bound=Aggregatable)


@dataclass(frozen=True)
class ErrorCounts:
    """Edit errors over reference words; pools to a micro-averaged rate."""
    errors: int = 0
    ref_words: int = 0

    @property
    def value(self) -> Optional[float]:
        return self.errors / self.ref_words if self.ref_words else None

    def __add__(self, other: "ErrorCounts") -> "ErrorCounts":
        return ErrorCounts(self.errors + other.errors, self.ref_words + other.ref_words)


@dataclass(frozen=True)
class MeanValue:
    """Plain mean over utterances (used for temporal distance)."""
    total: float = 0.0
    count: int = 0

    @property
    def value(self) -> Optional[float]:
        return self.total / self.count if self.count else None

    def __add__(self, other: "MeanValue") -> "MeanValue":
        return MeanValue(self.total + other.total, self.count + other.count)


def severity_bucket(meta: SpeakerMeta, thresholds: Tuple[float, float, float] = SEVERITY_THRESHOLDS) -> str:
    if meta.group is SpeakerGroup.CONTROL:
        return CONTROL
    if meta.wab_aq is None:
        raise MissingSpeakerMeta(f"speaker {meta.speaker_id!r} has no WAB-AQ score")
    mild, moderate, severe = thresholds
    if meta.wab_aq > mild:
        return "mild"
    if meta.wab_aq > moderate:
        return "moderate"
    if meta.wab_aq > severe:
        return "severe"
    return "very severe"


def _meta_lookup(meta: Union[Sequence[SpeakerMeta], Mapping[str, SpeakerMeta]]) -> Mapping[str, SpeakerMeta]:
    return meta if isinstance(meta, Mapping) else {m.speaker_id: m for m in meta}


def severity_report(
    per_utt: Sequence[Tuple[str, A]],
    meta: Union[Sequence[SpeakerMeta], Mapping[str, SpeakerMeta]],
    thresholds: Tuple[float, float, float] = SEVERITY_THRESHOLDS,
    include_overall: bool = False,
) -> Dict[str, A]:
    """Pool per-utterance counts by severity bucket.

    Buckets appear in clinical order and only when they have utterances;
    ``include_overall`` adds an ``all`` entry pooling every utterance.
    """
    lookup = _meta_lookup(meta)
    pooled: Dict[str, A] = {}
    for speaker_id, counts in per_utt:
        if speaker_id not in lookup:
            raise MissingSpeakerMeta(f"no speaker metadata for {speaker_id!r}")
        bucket = severity_bucket(lookup[speaker_id], thresholds)
        pooled[bucket] = pooled[bucket] + counts if bucket in pooled else counts
    report = {b: pooled[b] for b in BUCKET_ORDER if b in pooled}
    if include_overall and per_utt:
        total = per_utt[0][1]
        for _, counts in per_utt[1:]:
            total = total + counts
        report[OVERALL] = total
    return report


def corpus_summary(
    manifest: CorpusManifest,
    thresholds: Tuple[float, float, float] = SEVERITY_THRESHOLDS,
) -> pd.DataFrame:
    """Hours, utterances and paraphasic word share per dataset and severity bucket."""
    lookup = manifest.speaker_map()
    records = []
    for utt in manifest.utterances:
        n_para = sum(1 for w in utt.words if w.cls is not ParaphasiaClass.NONE)
        records.append({
            "dataset": utt.dataset.value,
            "bucket": severity_bucket(lookup[utt.speaker_id], thresholds),
            "speaker_id": utt.speaker_id,
            "ms": utt.duration_ms,
            "words": len(utt.words),
            "paraphasic_words": n_para,
        })
    columns = ["dataset", "bucket", "speakers", "utterances", "hours", "words", "paraphasia_pct"]
    if not records:
        return pd.DataFrame(columns=columns)

    frame = pd.DataFrame.from_records(records)
    summary = (
        frame.groupby(["dataset", "bucket"], sort=False)
        .agg(
            speakers=("speaker_id", "nunique"),
            utterances=("ms", "size"),
            ms=("ms", "sum"),
            words=("words", "sum"),
            paraphasic_words=("paraphasic_words", "sum"),
        )
        .reset_index()
    )
    summary["hours"] = (summary["ms"] / 3_600_000).round(4)
    summary["paraphasia_pct"] = (100 * summary["paraphasic_words"] / summary["words"].where(summary["words"] > 0)).round(2)
    summary["bucket"] = pd.Categorical(summary["bucket"], categories=list(BUCKET_ORDER), ordered=True)
    summary = summary.sort_values(["dataset", "bucket"]).reset_index(drop=True)
    summary["bucket"] = summary["bucket"].astype(str)
    return summary[columns]


__all__ = [
    "BUCKET_ORDER",
    "CONTROL",
    "ErrorCounts",
    "MeanValue",
    "OVERALL",
    "SEVERITY_BUCKETS",
    "corpus_summary",
    "severity_bucket",
    "severity_report",
]
