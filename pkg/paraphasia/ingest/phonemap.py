"""Table-driven IPA → phone → pseudo-word conversion for non-word errors.

Both tables ship as TSV files under ``paraphasia/tables`` and can be swapped
through the ``IPA_PHONE_TABLE`` / ``PHONE_GRAPHEME_TABLE`` settings.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from paraphasia.config import IPA_PHONE_TABLE_PATH, PHONE_GRAPHEME_TABLE_PATH
from paraphasia.errors import MalformedAnnotation, UnknownSymbol
from paraphasia.ingest.chat import ChatToken, read_tsv_pairs

LOG = logging.getLogger(__name__)

PHONE_INVENTORY = frozenset({
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW",
    "OY", "UH", "UW", "B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L",
    "M", "N", "NG", "P", "R", "S", "SH", "T", "TH", "V", "W", "Y", "Z", "ZH",
})

# Suffix marking the word-final variant of a grapheme entry
FINAL_SUFFIX = "$"
_SILENT = "-"


@dataclass(frozen=True)
class PhoneSeq:
    phones: Tuple[str, ...]

    def __post_init__(self) -> None:
        unknown = [p for p in self.phones if p not in PHONE_INVENTORY]
        if unknown:
            raise UnknownSymbol(self.phones.index(unknown[0]), unknown[0])

    def __len__(self) -> int:
        return len(self.phones)


@dataclass(frozen=True)
class PhoneMap:
    """The two conversion tables, loaded and validated."""
    ipa_to_phone: Dict[str, Tuple[str, ...]]
    graphemes: Dict[str, str]
    max_source_len: int

    @classmethod
    def from_files(
        cls,
        ipa_path: Union[str, Path] = IPA_PHONE_TABLE_PATH,
        grapheme_path: Union[str, Path] = PHONE_GRAPHEME_TABLE_PATH,
    ) -> "PhoneMap":
        ipa: Dict[str, Tuple[str, ...]] = {}
        for source, target in read_tsv_pairs(ipa_path):
            phones = () if target == _SILENT else tuple(target.split())
            bad = [p for p in phones if p not in PHONE_INVENTORY]
            if bad:
                raise MalformedAnnotation(f"{ipa_path}: {source!r} maps to unknown phone {bad[0]!r}")
            ipa[source] = phones

        graphemes: Dict[str, str] = {}
        for phone, letters in read_tsv_pairs(grapheme_path):
            if phone.rstrip(FINAL_SUFFIX) not in PHONE_INVENTORY:
                raise MalformedAnnotation(f"{grapheme_path}: unknown phone {phone!r}")
            if not (letters.isalpha() and letters.islower()):
                raise MalformedAnnotation(f"{grapheme_path}: {phone!r} must map to lowercase letters")
            graphemes[phone] = letters
        missing = sorted(PHONE_INVENTORY - graphemes.keys())
        if missing:
            raise MalformedAnnotation(f"{grapheme_path}: no grapheme for {missing}")

        return cls(ipa_to_phone=ipa, graphemes=graphemes, max_source_len=max(map(len, ipa)))


@functools.lru_cache(maxsize=1)
def default_phonemap() -> PhoneMap:
    return PhoneMap.from_files()


def ipa_to_phones(ipa: str, phonemap: Optional[PhoneMap] = None) -> PhoneSeq:
    """Greedy longest-match transduction of an IPA string into phones."""
    table = phonemap or default_phonemap()
    phones: List[str] = []
    pos = 0
    while pos < len(ipa):
        for size in range(min(table.max_source_len, len(ipa) - pos), 0, -1):
            chunk = ipa[pos:pos + size]
            if chunk in table.ipa_to_phone:
                phones.extend(table.ipa_to_phone[chunk])
                pos += size
                break
        else:
            raise UnknownSymbol(pos, ipa[pos])
    if not phones:
        raise UnknownSymbol(0, ipa)
    return PhoneSeq(tuple(phones))


def phones_to_pseudoword(phones: PhoneSeq, phonemap: Optional[PhoneMap] = None) -> str:
    """Spell a phone sequence, using word-final variants where the table has them."""
    table = phonemap or default_phonemap()
    last = len(phones.phones) - 1
    parts = []
    for i, phone in enumerate(phones.phones):
        final_key = phone + FINAL_SUFFIX
        if i == last and final_key in table.graphemes:
            parts.append(table.graphemes[final_key])
        else:
            parts.append(table.graphemes[phone])
    return "".join(parts)


def resolve_ipa_tokens(tokens: Sequence[ChatToken], phonemap: Optional[PhoneMap] = None) -> List[ChatToken]:
    """Replace ``@u`` tokens by their pseudo-word targets, annotations kept."""
    resolved = []
    for tok in tokens:
        if tok.is_ipa_form:
            word = phones_to_pseudoword(ipa_to_phones(tok.ipa_body, phonemap), phonemap)
            LOG.debug("IPA %r -> %r", tok.surface, word)
            tok = replace(tok, surface=word, is_ipa_form=False)
        resolved.append(tok)
    return resolved


__all__ = [
    "PHONE_INVENTORY",
    "PhoneMap",
    "PhoneSeq",
    "default_phonemap",
    "ipa_to_phones",
    "phones_to_pseudoword",
    "resolve_ipa_tokens",
]
