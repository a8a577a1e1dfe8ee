"""CHAT transcript subset: parsing, utterance filtering and normalization.

Supported main-tier grammar: plain words, ``[: target]`` / ``[:: target]``
replacements, ``[* code]`` error codes, the ``@u`` IPA marker, and the
markers listed in ``tables/chat_markers.tsv`` (unintelligible speech,
overlap, retracing, dropped fillers). Retraced material such as
``<the dog> [//]`` keeps its content words.
"""
from __future__ import annotations

import functools
import logging
import re
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from paraphasia.config import (
    CHAT_MARKER_TABLE_PATH,
    ERROR_CODE_MAP_PATH,
    MAX_DURATION_MS,
    MIN_DURATION_MS,
    PARTICIPANT_CODES,
)
from paraphasia.errors import InvalidTimestamps, MalformedAnnotation
from paraphasia.models import ParaphasiaClass

LOG = logging.getLogger(__name__)

IPA_MARKER = "@u"

_ERROR_CODE_RE = re.compile(r"[A-Za-z]+(?::[A-Za-z]+)?")
_WORD_RE = re.compile(r"[^\s\[]+")
_PUNCT_RE = re.compile(r"[^\w\s]|_")
_BULLET_RE = re.compile(r"\x15(\d+)_(\d+)\x15")

# Characters that should be stripped (invisible/control characters)
_CONTROL_CHAR_RE = re.compile(
    r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f"
    r"\u200b-\u200f"           # Zero-width chars
    r"\u202a-\u202e"           # Bidi overrides
    r"\u2060-\u2064"           # Invisible formatters
    r"\ufeff"                  # BOM
    r"]"
)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChatToken:
    surface: str
    target_word: Optional[str] = None
    error_code: Optional[str] = None
    is_ipa_form: bool = False

    def __post_init__(self) -> None:
        if not self.surface:
            raise MalformedAnnotation("token surface must be non-empty")
        if self.error_code is not None and not _ERROR_CODE_RE.fullmatch(self.error_code):
            raise MalformedAnnotation(f"ill-formed error code {self.error_code!r}")

    @property
    def ipa_body(self) -> str:
        """Surface with the ``@u`` marker removed."""
        return self.surface.replace(IPA_MARKER, "")

    def to_chat(self) -> str:
        parts = [self.surface]
        if self.target_word is not None:
            parts.append(f"[: {self.target_word}]")
        if self.error_code is not None:
            parts.append(f"[* {self.error_code}]")
        return " ".join(parts)


@dataclass(frozen=True)
class ChatUtterance:
    speaker_id: str
    tokens: Tuple[ChatToken, ...]
    start_ms: int
    end_ms: int
    unintelligible: bool = False
    overlapping: bool = False

    def __post_init__(self) -> None:
        if self.start_ms < 0:
            raise InvalidTimestamps(f"start_ms must be non-negative, got {self.start_ms}")
        if self.end_ms <= self.start_ms:
            raise InvalidTimestamps(f"end_ms ({self.end_ms}) must exceed start_ms ({self.start_ms})")

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


def format_chat_tokens(tokens: Iterable[ChatToken]) -> str:
    """Serialize tokens back to a main-tier body (annotations included)."""
    return " ".join(tok.to_chat() for tok in tokens)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarkerTable:
    exact: Dict[str, str]
    drop_prefixes: Tuple[str, ...]

    def kind_of(self, word: str) -> Optional[str]:
        if word in self.exact:
            return self.exact[word]
        if any(word.startswith(p) for p in self.drop_prefixes):
            return "drop"
        return None


def read_tsv_pairs(path: Union[str, Path]) -> List[Tuple[str, str]]:
    """Read ``source<TAB>target`` pairs, skipping blanks and ``#`` comments."""
    pairs: List[Tuple[str, str]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise MalformedAnnotation(f"{path}:{lineno}: expected 'source<TAB>target'")
            pairs.append((fields[0], fields[1].strip()))
    return pairs


@functools.lru_cache(maxsize=8)
def load_marker_table(path: Union[str, Path] = CHAT_MARKER_TABLE_PATH) -> MarkerTable:
    exact: Dict[str, str] = {}
    prefixes: List[str] = []
    for marker, kind in read_tsv_pairs(path):
        if kind == "drop_prefix":
            prefixes.append(marker)
        else:
            exact[marker] = kind
    return MarkerTable(exact=exact, drop_prefixes=tuple(prefixes))


@functools.lru_cache(maxsize=8)
def load_code_map(path: Union[str, Path] = ERROR_CODE_MAP_PATH) -> Dict[str, ParaphasiaClass]:
    return {code: ParaphasiaClass(cls) for code, cls in read_tsv_pairs(path)}


def classify_error_code(code: Optional[str], code_map: Optional[Dict[str, ParaphasiaClass]] = None) -> ParaphasiaClass:
    """Map a CHAT error code to a paraphasia class by its first field."""
    if not code:
        return ParaphasiaClass.NONE
    mapping = code_map if code_map is not None else load_code_map()
    return mapping.get(code.split(":", 1)[0].lower(), ParaphasiaClass.NONE)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def sanitize_line(text: str) -> str:
    """Drop timing bullets and invisible characters, then NFC-normalise."""
    text = _BULLET_RE.sub(" ", text)
    text = _CONTROL_CHAR_RE.sub("", text)
    return unicodedata.normalize("NFC", text)


def parse_chat_utterance(
    line: str,
    speaker_id: str,
    start_ms: int,
    end_ms: int,
    markers: Optional[MarkerTable] = None,
) -> ChatUtterance:
    """Parse one main-tier utterance body into a ChatUtterance."""
    table = markers or load_marker_table()
    text = sanitize_line(line)
    tokens: List[ChatToken] = []
    unintelligible = False
    overlapping = False

    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue

        if text[pos] == "[":
            close = text.find("]", pos)
            nested = text.find("[", pos + 1)
            if close == -1 or -1 < nested < close:
                raise MalformedAnnotation(f"unclosed annotation at column {pos}: {text[pos:pos + 20]!r}")
            content = text[pos + 1:close].strip()
            pos = close + 1

            if content.startswith(":"):
                target = content.lstrip(":").strip()
                if not tokens:
                    raise MalformedAnnotation(f"[{content}] has no preceding token")
                if not target:
                    raise MalformedAnnotation("empty replacement target")
                tokens[-1] = replace(tokens[-1], target_word=target)
            elif content.startswith("*"):
                if not tokens:
                    raise MalformedAnnotation(f"[{content}] has no preceding token")
                code = content[1:].strip()
                if code:
                    if not _ERROR_CODE_RE.fullmatch(code):
                        raise MalformedAnnotation(f"ill-formed error code {code!r}")
                    tokens[-1] = replace(tokens[-1], error_code=code)
            elif table.kind_of(f"[{content}]") == "overlap":
                overlapping = True
            # retrace markers and other scoped annotations carry no tokens
            continue

        match = _WORD_RE.match(text, pos)
        assert match is not None
        word = match.group()
        pos = match.end()

        kind = table.kind_of(word)
        if kind is None:
            word = word.replace("<", "").replace(">", "")
            if not word:
                continue
            kind = table.kind_of(word)
        if kind == "unintelligible":
            unintelligible = True
            continue
        if kind == "overlap":
            overlapping = True
            continue
        if kind is not None:
            continue

        tokens.append(ChatToken(surface=word, is_ipa_form=IPA_MARKER in word))

    return ChatUtterance(
        speaker_id=speaker_id,
        tokens=tuple(tokens),
        start_ms=start_ms,
        end_ms=end_ms,
        unintelligible=unintelligible,
        overlapping=overlapping,
    )


def filter_utterances(
    utts: Sequence[ChatUtterance],
    min_ms: int = MIN_DURATION_MS,
    max_ms: int = MAX_DURATION_MS,
) -> List[ChatUtterance]:
    """Keep clean utterances whose duration lies in [min_ms, max_ms]."""
    kept = [
        u for u in utts
        if min_ms <= u.duration_ms <= max_ms and not u.unintelligible and not u.overlapping
    ]
    if len(kept) != len(utts):
        LOG.info("filter_utterances: kept %d of %d utterances", len(kept), len(utts))
    return kept


def normalize_word(text: str) -> str:
    return _PUNCT_RE.sub("", text.lower())


def normalize_transcript(tokens: Sequence[Union[ChatToken, str]]) -> List[str]:
    """Lowercase, strip punctuation, drop words left empty."""
    words = (normalize_word(t.surface if isinstance(t, ChatToken) else t) for t in tokens)
    return [w for w in words if w]


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------

def read_chat_records(path: Union[str, Path], markers: Optional[MarkerTable] = None) -> List[ChatUtterance]:
    """Read ``speaker<TAB>body<TAB>start_ms<TAB>end_ms`` records."""
    utts: List[ChatUtterance] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith(("#", "@")):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise MalformedAnnotation(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
            speaker, body, start, end = fields
            try:
                start_ms, end_ms = int(start), int(end)
            except ValueError:
                raise InvalidTimestamps(f"{path}:{lineno}: timestamps must be integers") from None
            try:
                utts.append(parse_chat_utterance(body, speaker.strip(), start_ms, end_ms, markers))
            except MalformedAnnotation as exc:
                raise MalformedAnnotation(f"{path}:{lineno}: {exc}") from None
    LOG.info("Read %d utterances from %s", len(utts), path)
    return utts


def read_cha_file(
    path: Union[str, Path],
    speaker_id: Optional[str] = None,
    tier_codes: Sequence[str] = PARTICIPANT_CODES,
    markers: Optional[MarkerTable] = None,
) -> List[ChatUtterance]:
    """Read participant main tiers from a ``.cha`` file.

    Continuation lines (leading tab) are joined to the previous tier. Tiers
    without a timing bullet cannot be filtered by duration and are skipped.
    """
    path = Path(path)
    speaker = speaker_id or path.stem
    lines: List[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            line = raw.rstrip("\n")
            if line.startswith("\t") and lines:
                lines[-1] = lines[-1] + " " + line.strip()
            else:
                lines.append(line)

    utts: List[ChatUtterance] = []
    for line in lines:
        if not line.startswith("*") or ":" not in line:
            continue
        code, body = line[1:].split(":", 1)
        if code.strip() not in tier_codes:
            continue
        bullet = _BULLET_RE.search(body)
        if bullet is None:
            LOG.warning("Skipping untimed tier in %s: %s", path.name, body.strip()[:40])
            continue
        utts.append(parse_chat_utterance(
            body, speaker, int(bullet.group(1)), int(bullet.group(2)), markers,
        ))
    return utts


__all__ = [
    "ChatToken",
    "ChatUtterance",
    "MarkerTable",
    "classify_error_code",
    "filter_utterances",
    "format_chat_tokens",
    "load_code_map",
    "load_marker_table",
    "normalize_transcript",
    "normalize_word",
    "parse_chat_utterance",
    "read_cha_file",
    "read_chat_records",
    "read_tsv_pairs",
]
