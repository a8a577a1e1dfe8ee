"""Abstract base class for next-step scorers used by the joint beam search.

A scorer stands in for the attention decoder: given an opaque encoder
handle and a token-id prefix it returns the next-step token and
paraphasia-label distributions. Implementations must be deterministic and
safe for concurrent read-only use so utterances can be decoded in parallel.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Optional, Sequence

from paraphasia.scoring.losses import StepDistributions


class PrefixScorer(ABC):
    """Minimal contract that all next-step scorers must satisfy."""

    #: size of the token distribution, shared with the posterior grid
    vocab_size: int
    #: token id that ends a hypothesis, or None when only max_len ends one
    eos_id: Optional[int] = None

    @abstractmethod
    def score(self, handle: Any, prefix: Sequence[int]) -> StepDistributions:
        """Return the distributions for the token following *prefix*."""


__all__ = ["PrefixScorer"]
