"""Loss values for the joint CTC-attention and dual-task objectives.

Everything is computed in the log domain. Probabilities at or below the
log-zero floor count as zero, and losses saturate at ``LOSS_CAP`` instead
of becoming infinite.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from paraphasia.config import DEFAULT_CTC_ALPHA, LOG_ZERO, LOSS_CAP
from paraphasia.errors import InvalidDistribution, LengthMismatch, TargetTooLong, UnknownTokenId
from paraphasia.scoring.grid import PosteriorGrid, check_log_distribution


@dataclass(frozen=True, eq=False)
class StepDistributions:
    """One decoder step: next-token and paraphasia-label log-distributions."""
    token_logp: np.ndarray
    para_logp: np.ndarray

    def __post_init__(self) -> None:
        token = np.maximum(np.asarray(self.token_logp, dtype=np.float64), LOG_ZERO)
        para = np.maximum(np.asarray(self.para_logp, dtype=np.float64), LOG_ZERO)
        if token.ndim != 1 or token.size < 1:
            raise InvalidDistribution("token_logp must be a non-empty vector")
        if para.shape != (2,):
            raise InvalidDistribution("para_logp must have exactly two entries")
        check_log_distribution(token, "token_logp")
        check_log_distribution(para, "para_logp")
        object.__setattr__(self, "token_logp", token)
        object.__setattr__(self, "para_logp", para)

    @classmethod
    def from_probs(cls, token_probs: Sequence[float], para_probs: Sequence[float]) -> "StepDistributions":
        with np.errstate(divide="ignore"):
            return cls(np.log(np.asarray(token_probs, dtype=np.float64)),
                       np.log(np.asarray(para_probs, dtype=np.float64)))

    @property
    def para_label(self) -> int:
        """argmax of the paraphasia head, ties to 0."""
        return int(self.para_logp[1] > self.para_logp[0])


@dataclass(frozen=True)
class JointLossConfig:
    alpha: float = DEFAULT_CTC_ALPHA

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


def _cap(loss: float) -> float:
    return float(min(max(loss, 0.0), LOSS_CAP))


def min_ctc_frames(target: Sequence[int]) -> int:
    """Shortest frame count that can emit *target* (repeats need a blank between)."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def ctc_log_likelihood(grid: PosteriorGrid, target: Sequence[int]) -> float:
    """log P(target | grid) summed over all blank-augmented alignments."""
    blank = grid.blank_id
    for tok in target:
        if tok == blank or not 0 <= tok < grid.vocab_size:
            raise UnknownTokenId(f"target id {tok} is blank or outside the grid vocabulary")
    if min_ctc_frames(target) > grid.num_frames:
        raise TargetTooLong(
            f"target of length {len(target)} needs {min_ctc_frames(target)} frames, grid has {grid.num_frames}"
        )

    ext: List[int] = [blank]
    for tok in target:
        ext.extend((tok, blank))
    ext_arr = np.asarray(ext)
    n_states = len(ext)
    # s-2 transition allowed into non-blank states that differ from the label two back
    skip = np.zeros(n_states, dtype=bool)
    for s in range(2, n_states):
        skip[s] = ext[s] != blank and ext[s] != ext[s - 2]

    frames = grid.frames
    alpha = np.full(n_states, -np.inf)
    alpha[0] = frames[0, blank]
    if n_states > 1:
        alpha[1] = frames[0, ext[1]]
    for t in range(1, grid.num_frames):
        prev = alpha
        stay_or_step = prev.copy()
        stay_or_step[1:] = np.logaddexp(prev[1:], prev[:-1])
        jumped = np.full(n_states, -np.inf)
        jumped[2:] = prev[:-2]
        merged = np.where(skip, np.logaddexp(stay_or_step, jumped), stay_or_step)
        alpha = merged + frames[t, ext_arr]

    if n_states == 1:
        return float(alpha[0])
    return float(np.logaddexp(alpha[-1], alpha[-2]))


def ctc_forward_loss(grid: PosteriorGrid, target: Sequence[int]) -> float:
    return _cap(-ctc_log_likelihood(grid, target))


def token_nll(steps: Sequence[StepDistributions], target: Sequence[int]) -> float:
    if len(steps) != len(target):
        raise LengthMismatch(f"{len(steps)} steps for {len(target)} target tokens")
    total = 0.0
    for step, tok in zip(steps, target):
        if not 0 <= tok < step.token_logp.size:
            raise UnknownTokenId(f"target id {tok} is outside the vocabulary of size {step.token_logp.size}")
        logp = float(step.token_logp[tok])
        if logp <= LOG_ZERO:
            return LOSS_CAP
        total -= logp
    return _cap(total)


def joint_ctc_attention_loss(ctc: float, ce: float, cfg: JointLossConfig = JointLossConfig()) -> float:
    return cfg.alpha * ctc + (1.0 - cfg.alpha) * ce


def dual_task_loss(steps: Sequence[StepDistributions], tokens: Sequence[int], paras: Sequence[int]) -> float:
    """Token cross-entropy plus paraphasia-label cross-entropy, summed over steps."""
    if not len(steps) == len(tokens) == len(paras):
        raise LengthMismatch(f"steps={len(steps)} tokens={len(tokens)} paras={len(paras)}")
    token_part = token_nll(steps, tokens)
    para_part = 0.0
    for step, label in zip(steps, paras):
        if label not in (0, 1):
            raise ValueError(f"paraphasia label must be 0 or 1, got {label}")
        logp = float(step.para_logp[label])
        if logp <= LOG_ZERO:
            return LOSS_CAP
        para_part -= logp
    return _cap(token_part + para_part)


__all__ = [
    "JointLossConfig",
    "StepDistributions",
    "ctc_forward_loss",
    "ctc_log_likelihood",
    "dual_task_loss",
    "joint_ctc_attention_loss",
    "min_ctc_frames",
    "token_nll",
]
