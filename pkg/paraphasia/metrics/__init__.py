"""Word- and utterance-level metrics plus severity aggregation."""
from .alignment import align_edit, awer, wer
from .detection import temporal_distance, time_tolerant_recall, utterance_f1
from .severity import corpus_summary, severity_bucket, severity_report

__all__ = [
    "align_edit",
    "awer",
    "corpus_summary",
    "severity_bucket",
    "severity_report",
    "temporal_distance",
    "time_tolerant_recall",
    "utterance_f1",
    "wer",
]
