"""Levenshtein alignment and the word-level error rates built on it (WER, AWER)."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from paraphasia.errors import EmptyReference
from paraphasia.labels import AwerTranscript

EPS = "<eps>"


class EditKind(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True)
class EditOp:
    kind: EditKind
    ref_index: Optional[int]
    hyp_index: Optional[int]


@dataclass(frozen=True)
class EditAlignment:
    ops: Tuple[EditOp, ...]

    def count(self, kind: EditKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)

    @property
    def substitutions(self) -> int:
        return self.count(EditKind.SUBSTITUTE)

    @property
    def insertions(self) -> int:
        return self.count(EditKind.INSERT)

    @property
    def deletions(self) -> int:
        return self.count(EditKind.DELETE)

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind is not EditKind.MATCH)


def edit_distance_matrix(ref: Sequence[str], hyp: Sequence[str]) -> np.ndarray:
    """Wagner-Fischer table of prefix distances with unit costs."""
    d = np.zeros((len(ref) + 1, len(hyp) + 1), dtype=np.int64)
    d[:, 0] = np.arange(len(ref) + 1)
    d[0, :] = np.arange(len(hyp) + 1)
    for i in range(1, len(ref) + 1):
        for j in range(1, len(hyp) + 1):
            delta = 0 if ref[i - 1] == hyp[j - 1] else 1
            d[i, j] = min(d[i - 1, j - 1] + delta, d[i, j - 1] + 1, d[i - 1, j] + 1)
    return d


def align_edit(ref: Sequence[str], hyp: Sequence[str]) -> EditAlignment:
    """Minimum-cost alignment; traceback prefers match > substitute > insert > delete."""
    d = edit_distance_matrix(ref, hyp)
    i, j = len(ref), len(hyp)
    ops: List[EditOp] = []
    while i > 0 or j > 0:
        here = d[i, j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i - 1, j - 1] == here:
            ops.append(EditOp(EditKind.MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and d[i - 1, j - 1] + 1 == here:
            ops.append(EditOp(EditKind.SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif j > 0 and d[i, j - 1] + 1 == here:
            ops.append(EditOp(EditKind.INSERT, None, j - 1))
            j -= 1
        else:
            ops.append(EditOp(EditKind.DELETE, i - 1, None))
            i -= 1
    ops.reverse()
    return EditAlignment(tuple(ops))


def wer(ref: Sequence[str], hyp: Sequence[str]) -> float:
    if not ref:
        raise EmptyReference("WER is undefined for an empty reference")
    return align_edit(ref, hyp).cost / len(ref)


def awer(ref: AwerTranscript, hyp: AwerTranscript) -> float:
    """WER over composite ``word/label`` items."""
    if not len(ref):
        raise EmptyReference("AWER is undefined for an empty reference")
    return wer(ref.composite(), hyp.composite())


def render_alignment(ref: Sequence[str], hyp: Sequence[str]) -> Tuple[str, str]:
    """Two column-aligned rows, ``<eps>`` filling insertions and deletions."""
    top: List[str] = []
    bottom: List[str] = []
    for op in align_edit(ref, hyp).ops:
        r = ref[op.ref_index] if op.ref_index is not None else EPS
        h = hyp[op.hyp_index] if op.hyp_index is not None else EPS
        width = max(len(r), len(h))
        top.append(r.ljust(width))
        bottom.append(h.ljust(width))
    return " ".join(top).rstrip(), " ".join(bottom).rstrip()


__all__ = [
    "EPS",
    "EditAlignment",
    "EditKind",
    "EditOp",
    "align_edit",
    "awer",
    "edit_distance_matrix",
    "render_alignment",
    "wer",
]
