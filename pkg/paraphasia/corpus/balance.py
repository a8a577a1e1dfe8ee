"""Upsampling of paraphasic utterances for training lists."""
from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from paraphasia.config import DEFAULT_SEED
from paraphasia.errors import DegenerateCorpus

LOG = logging.getLogger(__name__)


def upsample_balance(utts: Sequence[Tuple[str, bool]], seed: int = DEFAULT_SEED) -> List[str]:
    """Duplicate paraphasic utterances until they are at least as many as the clean ones.

    *utts* holds ``(utterance_id, has_paraphasia)`` pairs. Every original id
    is kept in input order; duplicates are appended round-robin over the
    paraphasic ids, starting at a seeded offset.
    """
    paraphasic = [uid for uid, flag in utts if flag]
    n_clean = len(utts) - len(paraphasic)
    if not paraphasic or n_clean == 0:
        raise DegenerateCorpus(
            f"balancing needs both classes (paraphasic={len(paraphasic)}, clean={n_clean})"
        )
    missing = n_clean - len(paraphasic)
    out = [uid for uid, _ in utts]
    if missing <= 0:
        return out
    start = int(np.random.default_rng(seed).integers(len(paraphasic)))
    out.extend(paraphasic[(start + k) % len(paraphasic)] for k in range(missing))
    LOG.info("Upsampled %d paraphasic utterances with %d duplicates", len(paraphasic), missing)
    return out


__all__ = ["upsample_balance"]
