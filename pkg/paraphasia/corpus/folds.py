"""Speaker-independent fold construction."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Sequence, Tuple

import numpy as np

from paraphasia.config import DEFAULT_SEED, SPLIT_RATIOS
from paraphasia.errors import TooFewSpeakers
from paraphasia.models import CorpusManifest

LOG = logging.getLogger(__name__)

MIN_PROTOCOL_SPEAKERS = 10


@dataclass(frozen=True)
class FoldSpec:
    fold_id: str
    train: FrozenSet[str]
    dev: FrozenSet[str] = field(default_factory=frozenset)
    test: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for name, a, b in (("train/dev", self.train, self.dev),
                           ("train/test", self.train, self.test),
                           ("dev/test", self.dev, self.test)):
            overlap = a & b
            if overlap:
                raise ValueError(f"fold {self.fold_id}: {name} share speakers {sorted(overlap)}")

    @property
    def speakers(self) -> FrozenSet[str]:
        return self.train | self.dev | self.test

    def to_dict(self) -> Dict[str, object]:
        return {
            "fold_id": self.fold_id,
            "train": sorted(self.train),
            "dev": sorted(self.dev),
            "test": sorted(self.test),
        }


def largest_remainder(total: int, ratios: Sequence[float]) -> List[int]:
    """Split *total* into integer parts proportional to *ratios*.

    Leftover units go to the largest fractional parts, earlier parts first
    on ties.
    """
    exact = [Fraction(r).limit_denominator(10**6) for r in ratios]
    norm = sum(exact)
    shares = [total * r / norm for r in exact]
    counts = [int(s) for s in shares]
    leftover = total - sum(counts)
    order = sorted(range(len(shares)), key=lambda i: (-(shares[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def split_protocol(
    manifest: CorpusManifest,
    seed: int = DEFAULT_SEED,
    ratios: Tuple[float, float, float] = SPLIT_RATIOS,
) -> FoldSpec:
    """Seeded 70/10/20 train/dev/test split by speaker."""
    speakers = manifest.speaker_ids()
    if len(speakers) < MIN_PROTOCOL_SPEAKERS:
        raise TooFewSpeakers(f"protocol split needs >= {MIN_PROTOCOL_SPEAKERS} speakers, got {len(speakers)}")
    order = np.random.default_rng(seed).permutation(len(speakers))
    shuffled = [speakers[i] for i in order]
    n_train, n_dev, _ = largest_remainder(len(shuffled), ratios)
    fold = FoldSpec(
        fold_id=f"split-seed{seed}",
        train=frozenset(shuffled[:n_train]),
        dev=frozenset(shuffled[n_train:n_train + n_dev]),
        test=frozenset(shuffled[n_train + n_dev:]),
    )
    LOG.info("Protocol split (seed=%d): %d/%d/%d speakers", seed, len(fold.train), len(fold.dev), len(fold.test))
    return fold


def loso_folds(manifest: CorpusManifest) -> List[FoldSpec]:
    """One fold per speaker, holding that speaker out as the test set."""
    speakers = manifest.speaker_ids()
    if len(speakers) < 2:
        raise TooFewSpeakers(f"leave-one-speaker-out needs >= 2 speakers, got {len(speakers)}")
    everyone = frozenset(speakers)
    return [FoldSpec(fold_id=s, train=everyone - {s}, test=frozenset({s})) for s in speakers]


__all__ = ["FoldSpec", "largest_remainder", "loso_folds", "split_protocol"]
