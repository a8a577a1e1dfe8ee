"""Exception hierarchy.

All engine errors derive from ``ParaphasiaError`` (a ``ValueError``), so the
CLI can map every data problem to one exit code.
"""
from __future__ import annotations


class ParaphasiaError(ValueError):
    """Base class for data and configuration errors raised by the engine."""


# ---------------------------------------------------------------------------
# Ingest
# ---------------------------------------------------------------------------

class MalformedAnnotation(ParaphasiaError):
    """A bracketed CHAT annotation is unclosed, dangling, or ill-formed."""


class InvalidTimestamps(ParaphasiaError):
    """An utterance has a negative start or a non-positive duration."""


class UnknownSymbol(ParaphasiaError):
    """An IPA character has no entry in the IPA→phone table."""

    def __init__(self, position: int, symbol: str):
        self.position = position
        self.symbol = symbol
        super().__init__(f"unknown IPA symbol {symbol!r} at position {position}")


# ---------------------------------------------------------------------------
# Subword tokenizer
# ---------------------------------------------------------------------------

class VocabTooSmall(ParaphasiaError):
    """Requested vocabulary cannot hold every training character."""


class VocabTooLarge(ParaphasiaError):
    """Seed vocabulary is smaller than the requested vocabulary size."""


class UnencodableCharacter(ParaphasiaError):
    """A character has no entry, not even a single-character fallback."""


class UnknownTokenId(ParaphasiaError):
    """A token id is outside the model vocabulary."""


# ---------------------------------------------------------------------------
# Label flow / scoring / decoding
# ---------------------------------------------------------------------------

class EmptyWordGroup(ParaphasiaError):
    """OR-aggregation was asked to reduce a word with no subword labels."""


class TargetTooLong(ParaphasiaError):
    """No CTC alignment of the target fits in the available frames."""


class LengthMismatch(ParaphasiaError):
    """Parallel sequences have different lengths."""


class InvalidDistribution(ParaphasiaError):
    """A log-probability row is not normalized or has the wrong shape."""


class UnknownPrefix(ParaphasiaError):
    """A table scorer has no record for the requested prefix."""


# ---------------------------------------------------------------------------
# Metrics / corpus / configuration
# ---------------------------------------------------------------------------

class EmptyReference(ParaphasiaError):
    """Error rates are undefined for an empty reference."""


class MissingSpeakerMeta(ParaphasiaError):
    """A speaker id has no SpeakerMeta record."""


class TooFewSpeakers(ParaphasiaError):
    """Not enough speakers to build the requested folds."""


class DegenerateCorpus(ParaphasiaError):
    """Balancing needs both paraphasic and non-paraphasic utterances."""


class EmptyTestFold(ParaphasiaError):
    """A fold has no test utterances to evaluate."""


class SchemaVersionMismatch(ParaphasiaError):
    """A file was written with an unsupported schema version."""


class ConfigError(ParaphasiaError):
    """An experiment configuration key or value is invalid."""
