"""Deterministic core of end-to-end paraphasia detection.

Transcript preprocessing, subword tokenization, paraphasia label flow,
loss and decoding calculus, and the word/utterance-level metric suite.
"""

__version__ = "0.3.0"
