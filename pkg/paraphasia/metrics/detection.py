"""Paraphasia detection metrics over binary label sequences.

Positions are word indices within each transcript; the reference and the
prediction are never aligned first. Per-utterance results carry raw counts
so corpus aggregation can pool them (see ``metrics.severity``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from paraphasia.errors import LengthMismatch

LabelSequence = Sequence[int]


def _as_labels(labels: LabelSequence, name: str) -> np.ndarray:
    arr = np.asarray(labels, dtype=np.int64).reshape(-1)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 labels")
    return arr


# ---------------------------------------------------------------------------
# Temporal distance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TemporalDistance:
    ttc: int
    ctt: int

    @property
    def td(self) -> int:
        return self.ttc + self.ctt


def _nearest_distances(sources: np.ndarray, targets: np.ndarray, miss: int) -> int:
    """Sum over *sources* of the distance to the nearest position in sorted *targets*."""
    if sources.size == 0:
        return 0
    if targets.size == 0:
        return int(miss * sources.size)
    idx = np.searchsorted(targets, sources)
    right = targets[np.minimum(idx, targets.size - 1)]
    left = targets[np.maximum(idx - 1, 0)]
    return int(np.minimum(np.abs(sources - left), np.abs(right - sources)).sum())


def temporal_distance(y: LabelSequence, y_hat: LabelSequence) -> TemporalDistance:
    """Target-to-candidate plus candidate-to-target nearest-positive distances.

    A positive with no positive on the other side costs ``max(G, P)``.
    """
    ref = _as_labels(y, "y")
    hyp = _as_labels(y_hat, "y_hat")
    miss = max(ref.size, hyp.size)
    ref_pos = np.flatnonzero(ref)
    hyp_pos = np.flatnonzero(hyp)
    return TemporalDistance(
        ttc=_nearest_distances(ref_pos, hyp_pos, miss),
        ctt=_nearest_distances(hyp_pos, ref_pos, miss),
    )


# ---------------------------------------------------------------------------
# Time-tolerant recall
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TtrConfig:
    window: int = 0

    def __post_init__(self) -> None:
        if self.window < 0:
            raise ValueError("window must be non-negative")


@dataclass(frozen=True)
class TtrCounts:
    tp: int = 0
    fn: int = 0

    @property
    def ttr(self) -> Optional[float]:
        """Recall, or None when there are no target positives."""
        total = self.tp + self.fn
        return self.tp / total if total else None

    @property
    def value(self) -> Optional[float]:
        return self.ttr

    def __add__(self, other: "TtrCounts") -> "TtrCounts":
        return TtrCounts(self.tp + other.tp, self.fn + other.fn)


def time_tolerant_recall(y: LabelSequence, y_hat: LabelSequence, cfg: TtrConfig = TtrConfig()) -> TtrCounts:
    """Target positives with a predicted positive within ±window positions.

    The window is clipped to ``[0, P-1]`` of the prediction.
    """
    ref = _as_labels(y, "y")
    hyp = _as_labels(y_hat, "y_hat")
    positives = np.flatnonzero(ref)
    if hyp.size == 0:
        return TtrCounts(tp=0, fn=int(positives.size))
    # prefix[k] = number of predicted positives in hyp[:k]
    prefix = np.concatenate(([0], np.cumsum(hyp)))
    lo = np.maximum(positives - cfg.window, 0)
    hi = np.minimum(positives + cfg.window, hyp.size - 1)
    valid = lo <= hi
    hits = np.zeros(positives.size, dtype=bool)
    hits[valid] = prefix[hi[valid] + 1] - prefix[lo[valid]] > 0
    tp = int(hits.sum())
    return TtrCounts(tp=tp, fn=int(positives.size) - tp)


# ---------------------------------------------------------------------------
# Utterance-level F1
# ---------------------------------------------------------------------------

def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


@dataclass(frozen=True)
class F1Counts:
    """Confusion counts with the paraphasia class as positive."""
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def f1_pos(self) -> float:
        return _f1(self.tp, self.fp, self.fn)

    @property
    def f1_neg(self) -> float:
        return _f1(self.tn, self.fn, self.fp)

    @property
    def f1_avg(self) -> float:
        return (self.f1_pos + self.f1_neg) / 2

    @property
    def value(self) -> float:
        return self.f1_avg

    def __add__(self, other: "F1Counts") -> "F1Counts":
        return F1Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


def utterance_flags(word_labels_per_utt: Iterable[LabelSequence]) -> list[int]:
    """An utterance is paraphasic iff any of its words is."""
    return [int(any(labels)) for labels in word_labels_per_utt]


def utterance_f1(gt_flags: LabelSequence, pred_flags: LabelSequence) -> F1Counts:
    gt = _as_labels(gt_flags, "gt_flags")
    pred = _as_labels(pred_flags, "pred_flags")
    if gt.size != pred.size:
        raise LengthMismatch(f"{gt.size} reference flags but {pred.size} predicted flags")
    if gt.size == 0:
        raise LengthMismatch("utterance F1 needs at least one utterance")
    return F1Counts(
        tp=int(((gt == 1) & (pred == 1)).sum()),
        fp=int(((gt == 0) & (pred == 1)).sum()),
        fn=int(((gt == 1) & (pred == 0)).sum()),
        tn=int(((gt == 0) & (pred == 0)).sum()),
    )


__all__ = [
    "F1Counts",
    "LabelSequence",
    "TemporalDistance",
    "TtrConfig",
    "TtrCounts",
    "temporal_distance",
    "time_tolerant_recall",
    "utterance_f1",
    "utterance_flags",
]
