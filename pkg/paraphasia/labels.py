"""Paraphasia label flow between word and subword granularity.

Word labels are binary for the active task. Training targets copy each
word's label to all of its subwords; predictions come back to word level
by grouping subwords on the boundary marker and OR-ing their labels.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

from paraphasia.config import BOUNDARY_MARKER
from paraphasia.errors import EmptyWordGroup, LengthMismatch, MalformedAnnotation
from paraphasia.models import ManifestWord, ParaphasiaClass, Task
from paraphasia.subword.unigram import TokenizerModel, encode_word

LOG = logging.getLogger(__name__)

WordLike = Union[ManifestWord, "AnnotatedWord", Tuple[str, Union[str, ParaphasiaClass]]]


@dataclass(frozen=True)
class AnnotatedWord:
    word: str
    cls: ParaphasiaClass = ParaphasiaClass.NONE
    label: int = 0

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class AwerTranscript:
    """Ordered ``word/label`` items, e.g. ``i/0 have/0 efezia/1``."""
    items: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        for word, label in self.items:
            if not word or any(ch.isspace() for ch in word):
                raise MalformedAnnotation(f"AWER word must be a single non-empty token, got {word!r}")
            if label not in (0, 1):
                raise MalformedAnnotation(f"AWER label must be 0 or 1, got {label!r}")

    @classmethod
    def parse(cls, line: str) -> "AwerTranscript":
        items = []
        for item in line.split():
            word, sep, label = item.rpartition("/")
            if not sep or label not in ("0", "1"):
                raise MalformedAnnotation(f"expected 'word/label', got {item!r}")
            items.append((word, int(label)))
        return cls(tuple(items))

    @property
    def words(self) -> List[str]:
        return [w for w, _ in self.items]

    @property
    def labels(self) -> List[int]:
        return [lab for _, lab in self.items]

    def composite(self) -> List[str]:
        return [f"{w}/{lab}" for w, lab in self.items]

    def __len__(self) -> int:
        return len(self.items)

    def __str__(self) -> str:
        return " ".join(self.composite())


def _word_and_class(item: WordLike) -> Tuple[str, ParaphasiaClass]:
    if isinstance(item, tuple):
        word, cls = item
        return word, ParaphasiaClass(cls)
    return item.word, item.cls


def binarize_labels(words: Iterable[WordLike], task: Union[Task, str]) -> List[AnnotatedWord]:
    """Label each word 1 iff its class is positive for *task*."""
    positives = Task.parse(task).positive_classes
    out = []
    for item in words:
        word, cls = _word_and_class(item)
        out.append(AnnotatedWord(word=word, cls=cls, label=int(cls in positives)))
    return out


def propagate_to_subwords(words: Sequence[AnnotatedWord], model: TokenizerModel) -> List[Tuple[int, int]]:
    """(token id, label) pairs; every subword inherits its word's label."""
    pairs: List[Tuple[int, int]] = []
    for w in words:
        pairs.extend((tok, w.label) for tok in encode_word(model, w.word))
    return pairs


def group_subword_labels(
    pieces: Sequence[str],
    labels: Sequence[int],
    boundary_marker: str = BOUNDARY_MARKER,
) -> List[Tuple[str, List[int]]]:
    """Group subword pieces into words at each boundary marker.

    Returns ``(word, subword labels)`` per word. A leading piece without the
    marker still opens a word.
    """
    if len(pieces) != len(labels):
        raise LengthMismatch(f"{len(pieces)} pieces but {len(labels)} labels")
    groups: List[Tuple[str, List[int]]] = []
    for piece, label in zip(pieces, labels):
        if piece.startswith(boundary_marker) or not groups:
            groups.append((piece.replace(boundary_marker, ""), [label]))
        else:
            word, labs = groups[-1]
            groups[-1] = (word + piece.replace(boundary_marker, ""), labs + [label])
    return groups


def aggregate_or(subword_labels_per_word: Sequence[Sequence[int]]) -> List[int]:
    out = []
    for i, group in enumerate(subword_labels_per_word):
        if not group:
            raise EmptyWordGroup(f"word {i} has no subword labels")
        out.append(int(any(group)))
    return out


def build_awer_transcript(words: Sequence[AnnotatedWord]) -> AwerTranscript:
    return AwerTranscript(tuple((w.word, w.label) for w in words))


def hypothesis_to_awer(
    pieces: Sequence[str],
    labels: Sequence[int],
    boundary_marker: str = BOUNDARY_MARKER,
) -> AwerTranscript:
    """Turn decoded subword pieces and their per-token labels into a word-level transcript."""
    grouped = group_subword_labels(pieces, labels, boundary_marker)
    groups = [(w, labs) for w, labs in grouped if w]
    if len(groups) != len(grouped):
        LOG.debug("Dropped bare boundary markers from hypothesis %r", list(pieces))
    word_labels = aggregate_or([labs for _, labs in groups])
    return AwerTranscript(tuple((w, lab) for (w, _), lab in zip(groups, word_labels)))


__all__ = [
    "AnnotatedWord",
    "AwerTranscript",
    "aggregate_or",
    "binarize_labels",
    "build_awer_transcript",
    "group_subword_labels",
    "hypothesis_to_awer",
    "propagate_to_subwords",
]
