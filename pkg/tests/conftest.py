"""Shared fixtures for the paraphasia test suite."""
from __future__ import annotations

import itertools
from pathlib import Path
from typing import Dict, Sequence, Tuple

import numpy as np
import pytest

from paraphasia.decode.table_scorer import TableScorer
from paraphasia.models import CorpusManifest
from paraphasia.scoring.grid import PosteriorGrid
from paraphasia.scoring.losses import StepDistributions


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SYNTHETIC_DIR = PROJECT_ROOT / "data" / "synthetic"


@pytest.fixture
def project_root() -> Path:
    return PROJECT_ROOT


@pytest.fixture
def synthetic_dir() -> Path:
    return SYNTHETIC_DIR


@pytest.fixture
def shipped_manifest_path() -> Path:
    return SYNTHETIC_DIR / "manifest.jsonl"


# ---------------------------------------------------------------------------
# Corpora
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def synthetic_manifest() -> CorpusManifest:
    """Generated 12-speaker corpus (4 controls), 4 utterances each."""
    from paraphasia.corpus.synthetic import synthetic_corpus
    return synthetic_corpus(n_speakers=12, utts_per_speaker=4, seed=0)


@pytest.fixture(scope="session")
def synthetic_text() -> list[str]:
    """Deterministic tokenizer training sentences."""
    from paraphasia.corpus.synthetic import synthetic_sentences
    return synthetic_sentences(600, seed=0)


# ---------------------------------------------------------------------------
# Grids and scorers
# ---------------------------------------------------------------------------

def random_grid(rng: np.random.Generator, n_frames: int, vocab_size: int) -> PosteriorGrid:
    """Grid with Dirichlet(1) rows, so every token has non-zero mass."""
    return PosteriorGrid.from_probs(rng.dirichlet(np.ones(vocab_size), size=n_frames))


def random_step(rng: np.random.Generator, vocab_size: int, blank_free: bool = True) -> StepDistributions:
    token = rng.dirichlet(np.ones(vocab_size))
    if blank_free:
        token[0] = 0.0
        token = token / token.sum()
    return StepDistributions.from_probs(token, rng.dirichlet(np.ones(2)))


def full_table_scorer(
    rng: np.random.Generator,
    vocab_size: int,
    max_len: int,
    eos_id: int | None = None,
) -> TableScorer:
    """A scorer with an explicit record for every non-blank prefix up to *max_len*."""
    symbols = [t for t in range(1, vocab_size) if t != eos_id]
    table: Dict[Tuple[int, ...], StepDistributions] = {}
    for length in range(max_len + 1):
        for prefix in itertools.product(symbols, repeat=length):
            table[prefix] = random_step(rng, vocab_size)
    return TableScorer(table, vocab_size, eos_id=eos_id)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def labels_from(text: str) -> Sequence[int]:
    """'10010' -> [1, 0, 0, 1, 0]."""
    return [int(ch) for ch in text]
