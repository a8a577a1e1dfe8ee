"""Posterior grids: per-frame log-probabilities over a token vocabulary.

File format (UTF-8 text, ``#`` comment lines allowed before the header)::

    T V blank_id
    <blank>\ttok1\ttok2 ...        # V tab-separated vocabulary entries
    lp(0,0) lp(0,1) ... lp(0,V-1)  # T rows of V space-separated log-probs
    ...

Values are written with ``repr`` so a write/read cycle is exact. ``-inf``
is accepted on input and clamped to the log-zero floor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from paraphasia.config import BLANK_ID, LOG_ZERO, NORMALIZATION_TOLERANCE
from paraphasia.errors import InvalidDistribution, MalformedAnnotation

LOG = logging.getLogger(__name__)

BLANK_SYMBOL = "<blank>"


def check_log_distribution(row: np.ndarray, what: str = "row") -> None:
    total = float(np.logaddexp.reduce(row))
    if abs(total) > NORMALIZATION_TOLERANCE:
        raise InvalidDistribution(f"{what} log-sum-exp is {total:.3g}, expected 0")


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    frames: np.ndarray
    vocabulary: Tuple[str, ...] = field(default=())
    blank_id: int = BLANK_ID

    def __post_init__(self) -> None:
        frames = np.maximum(np.asarray(self.frames, dtype=np.float64), LOG_ZERO)
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 2:
            raise InvalidDistribution(f"grid must be T x V with T >= 1 and V >= 2, got shape {frames.shape}")
        if self.blank_id != BLANK_ID:
            raise InvalidDistribution(f"blank_id must be {BLANK_ID}")
        for t, row in enumerate(frames):
            check_log_distribution(row, f"frame {t}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

        vocab = tuple(self.vocabulary) or (BLANK_SYMBOL,) + tuple(str(i) for i in range(1, frames.shape[1]))
        if len(vocab) != frames.shape[1]:
            raise InvalidDistribution(f"vocabulary has {len(vocab)} entries for {frames.shape[1]} columns")
        object.__setattr__(self, "vocabulary", vocab)

    @classmethod
    def from_probs(cls, probs: Sequence[Sequence[float]], vocabulary: Sequence[str] = ()) -> "PosteriorGrid":
        with np.errstate(divide="ignore"):
            return cls(np.log(np.asarray(probs, dtype=np.float64)), tuple(vocabulary))

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def vocab_size(self) -> int:
        return int(self.frames.shape[1])

    def token_text(self, token_id: int) -> str:
        return self.vocabulary[token_id]


def write_grid(grid: PosteriorGrid, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{grid.num_frames} {grid.vocab_size} {grid.blank_id}", "\t".join(grid.vocabulary)]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in grid.frames)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_grid(path: Union[str, Path]) -> PosteriorGrid:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f if not ln.startswith("#") and ln.strip()]
    if len(lines) < 2:
        raise MalformedAnnotation(f"{path}: missing grid header")
    try:
        n_frames, n_cols, blank_id = (int(x) for x in lines[0].split())
    except ValueError:
        raise MalformedAnnotation(f"{path}: header must be 'T V blank_id'") from None
    vocabulary = tuple(lines[1].split("\t"))
    rows = lines[2:]
    if len(rows) != n_frames:
        raise MalformedAnnotation(f"{path}: header promises {n_frames} frames, found {len(rows)}")
    try:
        frames = np.array([[float(v) for v in row.split()] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise MalformedAnnotation(f"{path}: {exc}") from None
    if frames.shape != (n_frames, n_cols):
        raise MalformedAnnotation(f"{path}: expected {n_frames}x{n_cols} values, got {frames.shape}")
    return PosteriorGrid(frames, vocabulary, blank_id)


def grid_path(grids_dir: Union[str, Path], utterance_id: str, suffix: Optional[str] = ".grid") -> Path:
    return Path(grids_dir) / f"{utterance_id}{suffix}"


__all__ = [
    "BLANK_SYMBOL",
    "PosteriorGrid",
    "check_log_distribution",
    "grid_path",
    "read_grid",
    "write_grid",
]
