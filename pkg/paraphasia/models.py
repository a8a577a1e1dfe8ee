"""Pydantic records shared across the engine: corpus manifest and experiment config."""
from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from paraphasia.config import (
    CORPUS_SCHEMA_VERSION,
    DEFAULT_BEAM_SIZE,
    DEFAULT_CTC_WEIGHT,
    DEFAULT_MAX_LEN,
    DEFAULT_SEED,
    DEFAULT_TTR_WINDOWS,
    MAX_DURATION_MS,
    MIN_DURATION_MS,
    SEVERITY_THRESHOLDS,
)


class ParaphasiaClass(str, Enum):
    NONE = "none"
    PHONEMIC = "phonemic"
    NEOLOGISTIC = "neologistic"


class Task(str, Enum):
    """Binary detection task; the value names the positive class set."""
    PHN = "phn"
    NEO = "neo"
    PHN_NEO = "phn+neo"

    @classmethod
    def parse(cls, value: "str | Task") -> "Task":
        if isinstance(value, Task):
            return value
        key = value.strip().lower().replace("-", "+").replace("_", "+")
        aliases = {"p": "phn", "n": "neo", "p+n": "phn+neo"}
        return cls(aliases.get(key, key))

    @property
    def positive_classes(self) -> frozenset[ParaphasiaClass]:
        if self is Task.PHN:
            return frozenset({ParaphasiaClass.PHONEMIC})
        if self is Task.NEO:
            return frozenset({ParaphasiaClass.NEOLOGISTIC})
        return frozenset({ParaphasiaClass.PHONEMIC, ParaphasiaClass.NEOLOGISTIC})

    @property
    def slug(self) -> str:
        """Form used on the command line and in report rows."""
        return self.value.replace("+", "-")


class SpeakerGroup(str, Enum):
    CONTROL = "control"
    APHASIA = "aphasia"


class Dataset(str, Enum):
    PROTOCOL = "protocol"
    SCRIPTS = "scripts"


# ---------------------------------------------------------------------------
# Corpus manifest
# ---------------------------------------------------------------------------

class SpeakerMeta(BaseModel):
    model_config = ConfigDict(frozen=True)

    speaker_id: str = Field(min_length=1)
    group: SpeakerGroup
    wab_aq: Optional[float] = Field(default=None, ge=0.0, le=100.0)


class ManifestWord(BaseModel):
    model_config = ConfigDict(frozen=True)

    word: str = Field(min_length=1)
    cls: ParaphasiaClass = ParaphasiaClass.NONE


class UtteranceRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    utterance_id: str = Field(min_length=1)
    speaker_id: str = Field(min_length=1)
    words: Tuple[ManifestWord, ...]
    start_ms: int = Field(ge=0)
    end_ms: int
    dataset: Dataset

    @model_validator(mode="after")
    def _check_span(self) -> "UtteranceRecord":
        if self.end_ms <= self.start_ms:
            raise ValueError(f"{self.utterance_id}: end_ms must exceed start_ms")
        return self

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


class CorpusManifest(BaseModel):
    """Utterances plus the speakers they reference."""
    model_config = ConfigDict(frozen=True)

    schema_version: int = CORPUS_SCHEMA_VERSION
    utterances: Tuple[UtteranceRecord, ...]
    speakers: Tuple[SpeakerMeta, ...]

    @model_validator(mode="after")
    def _check_references(self) -> "CorpusManifest":
        seen: set[str] = set()
        for utt in self.utterances:
            if utt.utterance_id in seen:
                raise ValueError(f"duplicate utterance_id {utt.utterance_id!r}")
            seen.add(utt.utterance_id)
        known = {s.speaker_id for s in self.speakers}
        if len(known) != len(self.speakers):
            raise ValueError("duplicate speaker_id in speakers")
        missing = sorted({u.speaker_id for u in self.utterances} - known)
        if missing:
            raise ValueError(f"utterances reference unknown speakers: {missing}")
        return self

    def speaker_ids(self) -> List[str]:
        return sorted(s.speaker_id for s in self.speakers)

    def speaker_map(self) -> Dict[str, SpeakerMeta]:
        return {s.speaker_id: s for s in self.speakers}

    def utterances_for(self, speakers: "set[str] | frozenset[str]") -> List[UtteranceRecord]:
        return [u for u in self.utterances if u.speaker_id in speakers]


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

class ExperimentConfig(BaseModel):
    """Validated contents of an experiment config file (plus CLI overrides)."""
    model_config = ConfigDict(extra="forbid")

    manifest: Path
    output_dir: Path = Path("reports")
    task: Task = Task.PHN_NEO
    mode: Literal["ingest", "decode"] = "ingest"
    predictions: Optional[Path] = None
    grids_dir: Optional[Path] = None
    scorer_dir: Optional[Path] = None
    tokenizer: Optional[Path] = None
    dataset: Optional[Dataset] = None
    folds: Literal["loso", "protocol"] = "loso"
    windows: List[int] = Field(default_factory=lambda: list(DEFAULT_TTR_WINDOWS))
    vocab_sweep: List[int] = Field(default_factory=list)
    tokenizer_training: Literal["protocol", "scripts", "both"] = "both"
    ctc_weights: List[float] = Field(default_factory=lambda: [DEFAULT_CTC_WEIGHT])
    beam_size: int = Field(default=DEFAULT_BEAM_SIZE, ge=1)
    max_len: int = Field(default=DEFAULT_MAX_LEN, ge=1)
    seed: int = DEFAULT_SEED
    severity_thresholds: Tuple[float, float, float] = SEVERITY_THRESHOLDS
    min_duration_ms: int = Field(default=MIN_DURATION_MS, ge=0)
    max_duration_ms: int = Field(default=MAX_DURATION_MS, ge=1)
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])

    @field_validator("task", mode="before")
    @classmethod
    def _parse_task(cls, value):
        return Task.parse(value) if isinstance(value, str) else value

    @field_validator("windows")
    @classmethod
    def _non_negative_windows(cls, value: List[int]) -> List[int]:
        if any(w < 0 for w in value):
            raise ValueError("windows must be non-negative")
        return sorted(set(value))

    @field_validator("vocab_sweep")
    @classmethod
    def _positive_sizes(cls, value: List[int]) -> List[int]:
        if any(v <= 0 for v in value):
            raise ValueError("vocab sizes must be positive")
        return sorted(set(value))

    @field_validator("ctc_weights")
    @classmethod
    def _unit_interval(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one ctc weight is required")
        if any(not 0.0 <= w <= 1.0 for w in value):
            raise ValueError("ctc weights must lie in [0, 1]")
        return sorted(set(value))

    @field_validator("severity_thresholds")
    @classmethod
    def _descending(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if not value[0] > value[1] > value[2]:
            raise ValueError("severity thresholds must be strictly descending (mild, moderate, severe)")
        return value

    @model_validator(mode="after")
    def _check_mode_inputs(self) -> "ExperimentConfig":
        if self.mode == "ingest" and self.predictions is None:
            raise ValueError("mode=ingest requires 'predictions'")
        if self.mode == "decode" and (self.grids_dir is None or self.scorer_dir is None):
            raise ValueError("mode=decode requires 'grids_dir' and 'scorer_dir'")
        if self.min_duration_ms >= self.max_duration_ms:
            raise ValueError("min_duration_ms must be below max_duration_ms")
        return self
