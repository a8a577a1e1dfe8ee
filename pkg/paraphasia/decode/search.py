"""Greedy CTC decoding, CTC prefix scoring, and joint CTC-attention beam search.

Beam ranking uses token scores only::

    combined = (1 - ctc_weight) * attention log-prob sum + ctc_weight * CTC prefix score

Paraphasia labels ride along: each emitted token takes the argmax of that
step's paraphasia distribution. Ties everywhere go to the smaller token id.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from paraphasia.config import BOUNDARY_MARKER, DEFAULT_BEAM_SIZE, DEFAULT_CTC_WEIGHT, DEFAULT_MAX_LEN, LOG_ZERO
from paraphasia.decode.scorer_base import PrefixScorer
from paraphasia.errors import InvalidDistribution, UnknownTokenId
from paraphasia.labels import AwerTranscript, hypothesis_to_awer
from paraphasia.metrics.alignment import align_edit
from paraphasia.scoring.grid import PosteriorGrid

LOG = logging.getLogger(__name__)


def greedy_ctc_decode(grid: PosteriorGrid) -> List[int]:
    """Frame argmax, collapse repeats, drop blanks."""
    best = np.argmax(grid.frames, axis=1)
    out: List[int] = []
    prev = None
    for tok in best.tolist():
        if tok != prev and tok != grid.blank_id:
            out.append(tok)
        prev = tok
    return out


# ---------------------------------------------------------------------------
# CTC prefix scores
# ---------------------------------------------------------------------------

class CTCPrefixScorer:
    """Prefix and full-sequence CTC log-probabilities over one grid.

    Keeps, per prefix ``g``, the forward variables ``r_n[t]`` (paths ending
    in the last label of ``g``) and ``r_b[t]`` (paths ending in blank), and
    extends a prefix by every label at once. Expansions are cached, so one
    instance should serve one utterance.
    """

    def __init__(self, grid: PosteriorGrid):
        self.grid = grid
        self.x = grid.frames
        self.blank = grid.blank_id
        n_frames = grid.num_frames
        self._root = (np.full(n_frames, -np.inf), np.cumsum(self.x[:, self.blank]))
        self._expansions: Dict[Tuple[int, ...], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def _state(self, prefix: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
        if not prefix:
            return self._root
        _, r_n, r_b = self._expand(prefix[:-1])
        return r_n[:, prefix[-1]], r_b[:, prefix[-1]]

    def _expand(self, prefix: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(psi, r_n, r_b) for every one-label extension of *prefix*."""
        cached = self._expansions.get(prefix)
        if cached is not None:
            return cached
        g_n, g_b = self._state(prefix)
        n_frames, n_labels = self.x.shape

        phi = np.repeat(np.logaddexp(g_n, g_b)[:, None], n_labels, axis=1)
        if prefix:
            # a repeated label must pass through a blank first
            phi[:, prefix[-1]] = g_b

        r_n = np.full((n_frames, n_labels), -np.inf)
        r_b = np.full((n_frames, n_labels), -np.inf)
        if not prefix:
            r_n[0] = self.x[0]
        psi = r_n[0].copy()
        for t in range(1, n_frames):
            r_n[t] = np.logaddexp(r_n[t - 1], phi[t - 1]) + self.x[t]
            r_b[t] = np.logaddexp(r_n[t - 1], r_b[t - 1]) + self.x[t, self.blank]
            psi = np.logaddexp(psi, phi[t - 1] + self.x[t])

        result = (psi, r_n, r_b)
        self._expansions[prefix] = result
        return result

    def score(self, prefix: Sequence[int], complete: bool = False) -> float:
        """log P(output starts with *prefix*), or log P(output == *prefix*) when *complete*."""
        key = tuple(prefix)
        for tok in key:
            if tok == self.blank or not 0 <= tok < self.grid.vocab_size:
                raise UnknownTokenId(f"prefix id {tok} is blank or outside the grid vocabulary")
        if not key:
            value = float(self._root[1][-1]) if complete else 0.0
        else:
            psi, r_n, r_b = self._expand(key[:-1])
            last = key[-1]
            value = float(np.logaddexp(r_n[-1, last], r_b[-1, last])) if complete else float(psi[last])
        return max(value, LOG_ZERO)


def ctc_prefix_score(grid: PosteriorGrid, prefix: Sequence[int], complete: bool = False) -> float:
    return CTCPrefixScorer(grid).score(prefix, complete=complete)


# ---------------------------------------------------------------------------
# Joint beam search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeamConfig:
    beam_size: int = DEFAULT_BEAM_SIZE
    ctc_weight: float = DEFAULT_CTC_WEIGHT
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if not 0.0 <= self.ctc_weight <= 1.0:
            raise ValueError("ctc_weight must lie in [0, 1]")


@dataclass(frozen=True)
class Hypothesis:
    tokens: Tuple[int, ...]
    para_labels: Tuple[int, ...]
    att_score: float
    ctc_score: float
    combined: float

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.para_labels):
            raise ValueError("tokens and para_labels must have equal length")


def _combine(att: float, ctc: float, weight: float) -> float:
    return (1.0 - weight) * att + weight * ctc


def _rank_key(hyp: Hypothesis) -> Tuple[float, Tuple[int, ...]]:
    return (-hyp.combined, hyp.tokens)


def beam_search_joint(
    handle: Any,
    grid: PosteriorGrid,
    scorer: PrefixScorer,
    cfg: BeamConfig = BeamConfig(),
) -> Hypothesis:
    """Best complete hypothesis under the combined attention/CTC score.

    A hypothesis completes when the scorer's end-of-sequence token is chosen
    or when it reaches ``max_len`` tokens; completed hypotheses are scored
    with the full-sequence CTC probability. The blank id is never proposed.
    """
    if scorer.vocab_size != grid.vocab_size:
        raise InvalidDistribution(
            f"scorer vocabulary ({scorer.vocab_size}) differs from grid vocabulary ({grid.vocab_size})"
        )
    ctc = CTCPrefixScorer(grid)
    weight = cfg.ctc_weight
    eos = scorer.eos_id

    live = [Hypothesis((), (), 0.0, 0.0, 0.0)]
    ended: List[Hypothesis] = []
    for _ in range(cfg.max_len):
        candidates: List[Tuple[Hypothesis, bool]] = []
        for hyp in live:
            dist = scorer.score(handle, hyp.tokens)
            label = dist.para_label
            for tok in range(grid.vocab_size):
                if tok == grid.blank_id:
                    continue
                att = hyp.att_score + float(dist.token_logp[tok])
                if tok == eos:
                    ctc_score = ctc.score(hyp.tokens, complete=True)
                    done = Hypothesis(hyp.tokens, hyp.para_labels, att, ctc_score, _combine(att, ctc_score, weight))
                    candidates.append((done, True))
                else:
                    tokens = hyp.tokens + (tok,)
                    ctc_score = ctc.score(tokens)
                    grown = Hypothesis(tokens, hyp.para_labels + (label,), att, ctc_score,
                                       _combine(att, ctc_score, weight))
                    candidates.append((grown, False))

        candidates.sort(key=lambda c: (_rank_key(c[0]), not c[1]))
        live = []
        for hyp, is_done in candidates[:cfg.beam_size]:
            (ended if is_done else live).append(hyp)
        if not live:
            break
        # scores never rise along an extension, so nothing live can overtake
        if ended and max(h.combined for h in ended) > max(h.combined for h in live):
            live = []
            break

    for hyp in live:
        ctc_score = ctc.score(hyp.tokens, complete=True)
        ended.append(Hypothesis(hyp.tokens, hyp.para_labels, hyp.att_score, ctc_score,
                                _combine(hyp.att_score, ctc_score, weight)))

    best = min(ended, key=_rank_key)
    LOG.debug("beam search: %d completed hypotheses, best %s (%.4f)", len(ended), best.tokens, best.combined)
    return best


# ---------------------------------------------------------------------------
# CTC weight sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecodeItem:
    """One utterance to decode: handle, grid, scorer and reference words."""
    handle: Any
    grid: PosteriorGrid
    scorer: PrefixScorer
    reference: Tuple[str, ...]


@dataclass(frozen=True)
class SweepResult:
    best_weight: float
    wer_by_weight: Dict[float, float]


def hypothesis_awer(grid: PosteriorGrid, hyp: Hypothesis, boundary_marker: str = BOUNDARY_MARKER) -> AwerTranscript:
    """Word-level AWER transcript of a decoded hypothesis, via the grid vocabulary."""
    pieces = [grid.token_text(t) for t in hyp.tokens]
    return hypothesis_to_awer(pieces, list(hyp.para_labels), boundary_marker)


def pick_ctc_weight(wer_by_weight: Dict[float, float]) -> float:
    """Weight with the lowest WER; ties go to the smaller weight."""
    if not wer_by_weight:
        raise ValueError("at least one ctc weight is required")
    return min(wer_by_weight, key=lambda w: (wer_by_weight[w], w))


def sweep_ctc_weight(
    items: Sequence[DecodeItem],
    weights: Sequence[float],
    beam_size: int = DEFAULT_BEAM_SIZE,
    max_len: int = DEFAULT_MAX_LEN,
) -> SweepResult:
    """Pick the CTC weight with the lowest pooled dev WER (ties to the smaller weight)."""
    if not weights:
        raise ValueError("at least one ctc weight is required")
    wer_by_weight: Dict[float, float] = {}
    for weight in sorted(set(weights)):
        cfg = BeamConfig(beam_size=beam_size, ctc_weight=weight, max_len=max_len)
        errors = 0
        ref_words = 0
        for item in items:
            hyp = beam_search_joint(item.handle, item.grid, item.scorer, cfg)
            errors += align_edit(list(item.reference), hypothesis_awer(item.grid, hyp).words).cost
            ref_words += len(item.reference)
        wer_by_weight[weight] = errors / ref_words if ref_words else 0.0
        LOG.info("ctc_weight=%.2f dev WER=%.4f over %d utterances", weight, wer_by_weight[weight], len(items))

    return SweepResult(best_weight=pick_ctc_weight(wer_by_weight), wer_by_weight=wer_by_weight)


__all__ = [
    "BeamConfig",
    "CTCPrefixScorer",
    "DecodeItem",
    "Hypothesis",
    "SweepResult",
    "beam_search_joint",
    "ctc_prefix_score",
    "greedy_ctc_decode",
    "hypothesis_awer",
    "pick_ctc_weight",
    "sweep_ctc_weight",
]
