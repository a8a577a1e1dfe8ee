"""Deterministic synthetic corpora for regression tests and demos.

Nothing here resembles real patient speech beyond its shape: a fixed
lexicon, Zipf-distributed word choice, and paraphasias produced by
perturbing words (phonemic) or inventing them from syllables (neologistic).
All randomness comes from ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

import itertools
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from paraphasia.config import BOUNDARY_MARKER, DEFAULT_SEED
from paraphasia.decode.table_scorer import TableScorer, write_table_scorer
from paraphasia.labels import AwerTranscript
from paraphasia.models import (
    CorpusManifest,
    Dataset,
    ManifestWord,
    ParaphasiaClass,
    SpeakerGroup,
    SpeakerMeta,
    UtteranceRecord,
)
from paraphasia.scoring.grid import BLANK_SYMBOL, PosteriorGrid, write_grid
from paraphasia.scoring.losses import StepDistributions

LOG = logging.getLogger(__name__)

EOS_SYMBOL = "<eos>"

COMMON_WORDS = (
    "the a and to of i you it in is was that he she we they my his her on at "
    "for with have had go went come came get got take took make made see saw "
    "look said say tell told give gave find found think thought know knew want "
    "need like use work call try ask feel leave put mean keep let begin seem help "
    "talk turn start show hear play run move live believe bring happen write sit "
    "stand lose pay meet include continue set learn change lead understand watch "
    "follow stop create speak read spend grow open walk win offer remember love "
    "consider appear buy wait serve die send expect build stay fall cut reach kill "
    "remain suggest raise pass sell require report decide pull dog cat house car "
    "water bottle window kitchen table chair garden mother father sister brother "
    "doctor hospital morning evening today yesterday little big good bad happy "
    "sad very really then there here when where what because after before again "
    "cinderella slipper prince ball midnight pumpkin carriage umbrella sandwich "
    "bread butter peanut jelly knife plate stroke speech therapy aphasia picture "
    "story boy girl cookie jar stool mother dishes sink overflow curtain"
).split()

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "fl", "tr", "gr")
_NUCLEI = ("a", "e", "i", "o", "u", "er", "oi", "ai")


def syllables() -> List[str]:
    return [o + n for o, n in itertools.product(_ONSETS, _NUCLEI)]


def build_lexicon(n_invented: int = 160) -> List[str]:
    """Common words followed by invented two/three-syllable words, in fixed order."""
    sylls = syllables()
    invented: List[str] = []
    step = 7
    for k in range(n_invented):
        a = sylls[(k * step) % len(sylls)]
        b = sylls[(k * step * 3 + 5) % len(sylls)]
        word = a + b
        if k % 3 == 0:
            word += sylls[(k * 11 + 2) % len(sylls)]
        invented.append(word)
    seen = set()
    lexicon = []
    for word in list(COMMON_WORDS) + invented:
        if word not in seen:
            seen.add(word)
            lexicon.append(word)
    return lexicon


def _zipf_weights(n: int, exponent: float = 1.0) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=np.float64)
    weights = ranks ** -exponent
    return weights / weights.sum()


def synthetic_sentences(n: int = 600, seed: int = DEFAULT_SEED, min_len: int = 4, max_len: int = 10) -> List[str]:
    """*n* lowercase sentences of Zipf-sampled lexicon words."""
    rng = np.random.default_rng(seed)
    lexicon = build_lexicon()
    weights = _zipf_weights(len(lexicon), exponent=0.8)
    sentences = []
    for _ in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        idx = rng.choice(len(lexicon), size=length, p=weights)
        sentences.append(" ".join(lexicon[i] for i in idx))
    return sentences


# ---------------------------------------------------------------------------
# Paraphasia generation
# ---------------------------------------------------------------------------

def phonemic_variant(word: str, rng: np.random.Generator) -> str:
    """Swap one consonant for another (``shut`` → ``zut`` style)."""
    consonants = "bdfgklmnprstvz"
    positions = [i for i, ch in enumerate(word) if ch in consonants]
    if not positions:
        return word + "t"
    pos = positions[int(rng.integers(len(positions)))]
    choices = [c for c in consonants if c != word[pos]]
    return word[:pos] + choices[int(rng.integers(len(choices)))] + word[pos + 1:]


def neologism(rng: np.random.Generator) -> str:
    sylls = syllables()
    return "".join(sylls[int(rng.integers(len(sylls)))] for _ in range(int(rng.integers(2, 4))))


def synthetic_corpus(
    n_speakers: int = 12,
    utts_per_speaker: int = 4,
    seed: int = DEFAULT_SEED,
    paraphasia_rate: float = 0.15,
) -> CorpusManifest:
    """Speakers with spread-out AQ scores; every third speaker is a control."""
    rng = np.random.default_rng(seed)
    sentences = synthetic_sentences(n_speakers * utts_per_speaker, seed=seed, max_len=8)
    aq_levels = (88.0, 68.0, 42.0, 18.0)
    speakers: List[SpeakerMeta] = []
    utterances: List[UtteranceRecord] = []
    sentence_iter = iter(sentences)
    for s in range(n_speakers):
        speaker_id = f"S{s:02d}"
        is_control = s % 3 == 2
        if is_control:
            meta = SpeakerMeta(speaker_id=speaker_id, group=SpeakerGroup.CONTROL)
        else:
            meta = SpeakerMeta(speaker_id=speaker_id, group=SpeakerGroup.APHASIA,
                               wab_aq=aq_levels[s % len(aq_levels)])
        speakers.append(meta)
        clock = 0
        for u in range(utts_per_speaker):
            words = []
            for word in next(sentence_iter).split():
                cls = ParaphasiaClass.NONE
                if not is_control and rng.random() < paraphasia_rate:
                    if rng.random() < 0.6:
                        word, cls = phonemic_variant(word, rng), ParaphasiaClass.PHONEMIC
                    else:
                        word, cls = neologism(rng), ParaphasiaClass.NEOLOGISTIC
                words.append(ManifestWord(word=word, cls=cls))
            duration = 600 * len(words) + int(rng.integers(0, 400))
            start = clock + 250
            utterances.append(UtteranceRecord(
                utterance_id=f"{speaker_id}-{u:04d}",
                speaker_id=speaker_id,
                words=tuple(words),
                start_ms=start,
                end_ms=start + duration,
                dataset=Dataset.PROTOCOL if u % 4 != 3 else Dataset.SCRIPTS,
            ))
            clock = start + duration
    return CorpusManifest(utterances=tuple(utterances), speakers=tuple(speakers))


def reference_transcript(utt: UtteranceRecord, positives: Sequence[ParaphasiaClass]) -> AwerTranscript:
    return AwerTranscript(tuple((w.word, int(w.cls in positives)) for w in utt.words))


def synthetic_predictions(
    manifest: CorpusManifest,
    seed: int = DEFAULT_SEED,
    word_error_rate: float = 0.1,
    label_flip_rate: float = 0.1,
) -> Dict[str, AwerTranscript]:
    """Noisy copies of the phn+neo reference transcripts, standing in for model output."""
    rng = np.random.default_rng(seed + 1)
    positives = (ParaphasiaClass.PHONEMIC, ParaphasiaClass.NEOLOGISTIC)
    out: Dict[str, AwerTranscript] = {}
    for utt in manifest.utterances:
        items: List[Tuple[str, int]] = []
        for word, label in reference_transcript(utt, positives).items:
            roll = rng.random()
            if roll < word_error_rate / 2:
                continue
            if roll < word_error_rate:
                word = phonemic_variant(word, rng)
            if rng.random() < label_flip_rate:
                label = 1 - label
            items.append((word, label))
        if not items:
            items.append(("uh", 0))
        out[utt.utterance_id] = AwerTranscript(tuple(items))
    return out


# ---------------------------------------------------------------------------
# Decode fixtures: one grid and one table scorer per utterance
# ---------------------------------------------------------------------------

def decode_fixture(
    utt: UtteranceRecord,
    positives: Sequence[ParaphasiaClass],
    rng: np.random.Generator,
    peak: float = 0.8,
) -> Tuple[PosteriorGrid, TableScorer]:
    """Whole-word pieces; the grid and scorer both favour the reference path."""
    words = [BOUNDARY_MARKER + w.word for w in utt.words]
    labels = [int(w.cls in positives) for w in utt.words]
    vocab = [BLANK_SYMBOL] + sorted(set(words)) + [EOS_SYMBOL]
    ids = {piece: i for i, piece in enumerate(vocab)}
    eos = len(vocab) - 1
    n_vocab = len(vocab)

    frames = []
    for piece in words:
        for target in (ids[piece], 0):
            row = rng.dirichlet(np.ones(n_vocab)) * (1.0 - peak)
            row[target] += peak
            frames.append(np.log(row))
    grid = PosteriorGrid(np.array(frames), tuple(vocab))

    table: Dict[Tuple[int, ...], StepDistributions] = {}
    path = [ids[p] for p in words]
    for k in range(len(path) + 1):
        nxt = path[k] if k < len(path) else eos
        token = rng.dirichlet(np.ones(n_vocab)) * (1.0 - peak)
        token[0] = 0.0
        token = token / token.sum() * (1.0 - peak)
        token[nxt] += peak
        label = labels[k] if k < len(labels) else 0
        para = np.array([0.2, 0.8]) if label else np.array([0.8, 0.2])
        with np.errstate(divide="ignore"):
            table[tuple(path[:k])] = StepDistributions(np.log(token), np.log(para))
    uniform = np.full(n_vocab, 1.0 / (n_vocab - 1))
    uniform[0] = 0.0
    with np.errstate(divide="ignore"):
        default = StepDistributions(np.log(uniform), np.log(np.array([0.9, 0.1])))
    return grid, TableScorer(table, n_vocab, eos_id=eos, default=default)


def write_decode_fixtures(
    manifest: CorpusManifest,
    grids_dir: Union[str, Path],
    scorer_dir: Union[str, Path],
    seed: int = DEFAULT_SEED,
) -> int:
    rng = np.random.default_rng(seed + 2)
    positives = (ParaphasiaClass.PHONEMIC, ParaphasiaClass.NEOLOGISTIC)
    for utt in manifest.utterances:
        grid, scorer = decode_fixture(utt, positives, rng)
        write_grid(grid, Path(grids_dir) / f"{utt.utterance_id}.grid")
        write_table_scorer(scorer, Path(scorer_dir) / f"{utt.utterance_id}.scorer")
    LOG.info("Wrote decode fixtures for %d utterances", len(manifest.utterances))
    return len(manifest.utterances)


__all__ = [
    "EOS_SYMBOL",
    "build_lexicon",
    "decode_fixture",
    "neologism",
    "phonemic_variant",
    "synthetic_corpus",
    "synthetic_predictions",
    "synthetic_sentences",
    "write_decode_fixtures",
]
