"""Unigram language-model subword tokenizer.

Training follows the usual unigram recipe: a seed vocabulary of frequent
substrings, EM re-estimation of piece probabilities over the segmentation
lattice, and rounds of pruning that drop the pieces whose removal costs the
least corpus likelihood. Single characters are never pruned, so every
training character stays encodable.

Words are encoded independently with the boundary marker prepended, so no
token ever spans two words.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from paraphasia.config import (
    BOUNDARY_MARKER,
    EM_ITERATIONS,
    PRUNE_FRACTION,
    SEED_MAX_PIECE_LEN,
    SEED_MIN_FREQUENCY,
    TOKENIZER_FORMAT_VERSION,
)
from paraphasia.errors import (
    DegenerateCorpus,
    SchemaVersionMismatch,
    UnencodableCharacter,
    UnknownTokenId,
    VocabTooLarge,
    VocabTooSmall,
)

LOG = logging.getLogger(__name__)

_HEADER_TAG = "#unigram"
# Additive smoothing keeps unused pieces at a finite log-probability
_SMOOTHING = 1e-3


@dataclass(frozen=True)
class SeedParams:
    max_piece_len: int = SEED_MAX_PIECE_LEN
    min_frequency: int = SEED_MIN_FREQUENCY
    em_iterations: int = EM_ITERATIONS
    prune_fraction: float = PRUNE_FRACTION

    def __post_init__(self) -> None:
        if self.max_piece_len < 1 or self.min_frequency < 1 or self.em_iterations < 1:
            raise ValueError("seed parameters must be positive")
        if not 0.0 < self.prune_fraction < 1.0:
            raise ValueError("prune_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class TokenizerModel:
    """Piece → log-probability table; ids index the lexicographically sorted pieces."""
    entries: Mapping[str, float]
    boundary_marker: str = BOUNDARY_MARKER
    pieces: Tuple[str, ...] = field(init=False, repr=False)
    piece_ids: Dict[str, int] = field(init=False, repr=False, compare=False)
    max_piece_len: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.entries:
            raise VocabTooSmall("a tokenizer needs at least one entry")
        if len(self.boundary_marker) != 1:
            raise ValueError("boundary_marker must be a single character")
        for piece, logp in self.entries.items():
            if not piece or not math.isfinite(logp) or logp > 0.0:
                raise ValueError(f"invalid entry {piece!r}: {logp}")
        pieces = tuple(sorted(self.entries))
        object.__setattr__(self, "entries", dict(self.entries))
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "piece_ids", {p: i for i, p in enumerate(pieces)})
        object.__setattr__(self, "max_piece_len", max(len(p) for p in pieces))

    @property
    def vocab_size(self) -> int:
        return len(self.pieces)

    def id_of(self, piece: str) -> int:
        return self.piece_ids[piece]

    def piece_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.pieces):
            raise UnknownTokenId(f"token id {token_id} outside vocabulary of {len(self.pieces)}")
        return self.pieces[token_id]

    def is_word_start(self, token_id: int) -> bool:
        return self.piece_of(token_id).startswith(self.boundary_marker)


# ---------------------------------------------------------------------------
# Encoding / decoding
# ---------------------------------------------------------------------------

def _viterbi_pieces(
    entries: Mapping[str, float],
    text: str,
    max_len: int,
    exclude: Optional[str] = None,
) -> Tuple[float, Tuple[str, ...]]:
    """Best segmentation of *text*: max score, then fewer pieces, then smallest sequence.

    *exclude* names one piece to leave out of the lattice. Returns
    ``(-inf, ())`` when no segmentation exists.
    """
    # best[j] = (score, piece count, pieces) for text[:j]
    best: List[Optional[Tuple[float, int, Tuple[str, ...]]]] = [None] * (len(text) + 1)
    best[0] = (0.0, 0, ())
    for j in range(1, len(text) + 1):
        winner = None
        for i in range(max(0, j - max_len), j):
            prev = best[i]
            piece = text[i:j]
            if prev is None or piece == exclude or piece not in entries:
                continue
            cand = (prev[0] + entries[piece], prev[1] + 1, prev[2] + (piece,))
            if winner is None or (-cand[0], cand[1], cand[2]) < (-winner[0], winner[1], winner[2]):
                winner = cand
        best[j] = winner
    final = best[len(text)]
    if final is None:
        return -math.inf, ()
    return final[0], final[2]


def encode_viterbi(model: TokenizerModel, word: str) -> List[int]:
    """Max-likelihood segmentation of *word* as given (no marker is added)."""
    for pos, ch in enumerate(word):
        if ch not in model.entries:
            raise UnencodableCharacter(f"character {ch!r} at position {pos} of {word!r} has no entry")
    _, pieces = _viterbi_pieces(model.entries, word, model.max_piece_len)
    return [model.piece_ids[p] for p in pieces]


def encode_word(model: TokenizerModel, word: str) -> List[int]:
    return encode_viterbi(model, model.boundary_marker + word)


def encode_text(model: TokenizerModel, text: Union[str, Sequence[str]]) -> List[int]:
    words = text.split() if isinstance(text, str) else text
    ids: List[int] = []
    for word in words:
        ids.extend(encode_word(model, word))
    return ids


def decode_tokens(model: TokenizerModel, ids: Iterable[int]) -> str:
    text = "".join(model.piece_of(i) for i in ids).replace(model.boundary_marker, " ")
    return text[1:] if text.startswith(" ") else text


def tokens_per_word(model: TokenizerModel, words: Sequence[str]) -> float:
    """Average subword count per word; 0.0 for an empty word list."""
    if not words:
        return 0.0
    return sum(len(encode_word(model, w)) for w in words) / len(words)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _word_counts(corpus: Sequence[str], marker: str) -> Dict[str, int]:
    counts: Counter[str] = Counter()
    for sentence in corpus:
        for word in sentence.split():
            counts[marker + word] += 1
    # fixed iteration order keeps float reductions reproducible
    return dict(sorted(counts.items()))


def _seed_vocabulary(words: Mapping[str, int], params: SeedParams) -> Dict[str, float]:
    freq: Counter[str] = Counter()
    for word, count in words.items():
        for i in range(len(word)):
            for j in range(i + 1, min(len(word), i + params.max_piece_len) + 1):
                freq[word[i:j]] += count
    seed = {p: c for p, c in freq.items() if c >= params.min_frequency or len(p) == 1}
    total = float(sum(seed.values()))
    return {p: math.log(c / total) for p, c in sorted(seed.items())}


def _logsumexp(values: List[float]) -> float:
    if len(values) == 1:
        return values[0]
    return float(np.logaddexp.reduce(np.asarray(values)))


def _expected_counts(entries: Mapping[str, float], words: Mapping[str, int], max_len: int) -> Dict[str, float]:
    """E-step: expected piece counts by forward-backward over each word's lattice."""
    counts: Dict[str, float] = dict.fromkeys(entries, 0.0)
    for word, weight in words.items():
        n = len(word)
        alpha = [-math.inf] * (n + 1)
        alpha[0] = 0.0
        for j in range(1, n + 1):
            terms = [alpha[i] + entries[word[i:j]] for i in range(max(0, j - max_len), j)
                     if word[i:j] in entries and alpha[i] > -math.inf]
            if terms:
                alpha[j] = _logsumexp(terms)
        beta = [-math.inf] * (n + 1)
        beta[n] = 0.0
        for i in range(n - 1, -1, -1):
            terms = [entries[word[i:j]] + beta[j] for j in range(i + 1, min(n, i + max_len) + 1)
                     if word[i:j] in entries and beta[j] > -math.inf]
            if terms:
                beta[i] = _logsumexp(terms)
        z = alpha[n]
        for i in range(n):
            if alpha[i] == -math.inf:
                continue
            for j in range(i + 1, min(n, i + max_len) + 1):
                piece = word[i:j]
                if piece in entries and beta[j] > -math.inf:
                    counts[piece] += weight * math.exp(alpha[i] + entries[piece] + beta[j] - z)
    return counts


def _maximize(counts: Mapping[str, float]) -> Dict[str, float]:
    total = sum(counts.values()) + _SMOOTHING * len(counts)
    return {p: math.log((c + _SMOOTHING) / total) for p, c in counts.items()}


def _fit(entries: Dict[str, float], words: Mapping[str, int], iterations: int) -> Dict[str, float]:
    max_len = max(len(p) for p in entries)
    for _ in range(iterations):
        entries = _maximize(_expected_counts(entries, words, max_len))
    return entries


def _removal_losses(entries: Mapping[str, float], words: Mapping[str, int]) -> Dict[str, float]:
    """Likelihood lost by dropping each multi-character piece.

    A piece used ``f`` times in the Viterbi segmentation costs
    ``f * (logp(piece) - best alternative segmentation score)``.
    """
    max_len = max(len(p) for p in entries)
    usage: Counter[str] = Counter()
    for word, weight in words.items():
        _, pieces = _viterbi_pieces(entries, word, max_len)
        for piece in pieces:
            usage[piece] += weight

    losses: Dict[str, float] = {}
    for piece, logp in entries.items():
        if len(piece) == 1:
            continue
        if usage[piece] == 0:
            losses[piece] = 0.0
            continue
        alt_score, _ = _viterbi_pieces(entries, piece, len(piece), exclude=piece)
        losses[piece] = usage[piece] * (logp - alt_score)
    return losses


def train_unigram(
    corpus: Sequence[str],
    vocab_size: int,
    seed_params: Optional[SeedParams] = None,
    boundary_marker: str = BOUNDARY_MARKER,
) -> TokenizerModel:
    """Train a model with exactly *vocab_size* pieces on whitespace-tokenized sentences."""
    params = seed_params or SeedParams()
    words = _word_counts(corpus, boundary_marker)
    if not words:
        raise DegenerateCorpus("training corpus is empty")

    chars = {ch for w in words for ch in w}
    if vocab_size < len(chars):
        raise VocabTooSmall(
            f"vocab_size {vocab_size} < {len(chars)} distinct characters "
            f"(the boundary marker {boundary_marker!r} counts as a character)"
        )

    entries = _seed_vocabulary(words, params)
    if len(entries) < vocab_size:
        raise VocabTooLarge(f"seed vocabulary has only {len(entries)} pieces, {vocab_size} requested")
    LOG.info("Seed vocabulary: %d pieces (%d characters) from %d word types", len(entries), len(chars), len(words))

    entries = _fit(entries, words, params.em_iterations)
    rounds = 0
    while len(entries) > vocab_size:
        losses = _removal_losses(entries, words)
        n_prunable = len(losses)
        n_remove = min(max(1, int(n_prunable * params.prune_fraction)), len(entries) - vocab_size)
        # least loss first; longer then lexicographically smaller pieces break ties
        doomed = sorted(losses, key=lambda p: (losses[p], -len(p), p))[:n_remove]
        for piece in doomed:
            del entries[piece]
        entries = _fit(entries, words, params.em_iterations)
        rounds += 1
        LOG.debug("Pruning round %d: removed %d, %d pieces left", rounds, n_remove, len(entries))

    LOG.info("Trained unigram tokenizer: %d pieces after %d pruning rounds", len(entries), rounds)
    return TokenizerModel(entries=entries, boundary_marker=boundary_marker)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_model(model: TokenizerModel, path: Union[str, Path]) -> Path:
    """Write the versioned text format: one header line, then ``piece<TAB>logprob`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{_HEADER_TAG}\tversion={TOKENIZER_FORMAT_VERSION}"
        f"\tvocab_size={model.vocab_size}\tboundary={model.boundary_marker}"
    ]
    lines.extend(f"{piece}\t{model.entries[piece]!r}" for piece in model.pieces)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_model(path: Union[str, Path]) -> TokenizerModel:
    with open(path, "r", encoding="utf-8") as f:
        header, *body = f.read().splitlines()
    fields = header.split("\t")
    if fields[0] != _HEADER_TAG:
        raise SchemaVersionMismatch(f"{path}: not a unigram tokenizer file")
    meta = dict(item.split("=", 1) for item in fields[1:])
    if int(meta.get("version", -1)) != TOKENIZER_FORMAT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: tokenizer format version {meta.get('version')} (expected {TOKENIZER_FORMAT_VERSION})"
        )
    entries: Dict[str, float] = {}
    for line in body:
        if not line:
            continue
        piece, logp = line.rsplit("\t", 1)
        entries[piece] = float(logp)
    model = TokenizerModel(entries=entries, boundary_marker=meta["boundary"])
    if model.vocab_size != int(meta["vocab_size"]):
        raise SchemaVersionMismatch(f"{path}: header says {meta['vocab_size']} pieces, found {model.vocab_size}")
    return model


__all__ = [
    "SeedParams",
    "TokenizerModel",
    "decode_tokens",
    "encode_text",
    "encode_viterbi",
    "encode_word",
    "load_model",
    "save_model",
    "tokens_per_word",
    "train_unigram",
]
