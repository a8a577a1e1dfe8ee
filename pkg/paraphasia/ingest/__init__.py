"""Transcript ingestion: CHAT parsing, filtering, and IPA pseudo-word mapping."""
from paraphasia.ingest.chat import (
    ChatToken,
    ChatUtterance,
    classify_error_code,
    filter_utterances,
    normalize_transcript,
    parse_chat_utterance,
    read_cha_file,
    read_chat_records,
)
from paraphasia.ingest.phonemap import (
    PHONE_INVENTORY,
    PhoneSeq,
    ipa_to_phones,
    phones_to_pseudoword,
    resolve_ipa_tokens,
)

__all__ = [
    "ChatToken",
    "ChatUtterance",
    "PHONE_INVENTORY",
    "PhoneSeq",
    "classify_error_code",
    "filter_utterances",
    "ipa_to_phones",
    "normalize_transcript",
    "parse_chat_utterance",
    "phones_to_pseudoword",
    "read_cha_file",
    "read_chat_records",
    "resolve_ipa_tokens",
]
