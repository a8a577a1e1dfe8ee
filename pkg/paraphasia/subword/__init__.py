from .unigram import (
    TokenizerModel,
    decode_tokens,
    encode_text,
    encode_viterbi,
    encode_word,
    load_model,
    save_model,
    tokens_per_word,
    train_unigram,
)

__all__ = [
    "TokenizerModel",
    "decode_tokens",
    "encode_text",
    "encode_viterbi",
    "encode_word",
    "load_model",
    "save_model",
    "tokens_per_word",
    "train_unigram",
]
