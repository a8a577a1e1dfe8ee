"""Centralized configuration for the paraphasia engine.

This module contains all default settings, paths, and experiment constants
to avoid hardcoded values scattered across the codebase.
"""
import os
from pathlib import Path

# Try to load .env file from project root
try:
    from dotenv import load_dotenv
    env_path = Path(__file__).resolve().parents[1] / ".env"
    load_dotenv(env_path)
except ImportError:
    pass

PACKAGE_DIR = Path(__file__).resolve().parent
PROJECT_ROOT = PACKAGE_DIR.parent

# Schema versions (bump on any incompatible change to the file formats)
CORPUS_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1
TOKENIZER_FORMAT_VERSION = 1

# Paths
CORPUS_SCHEMA_PATH = PROJECT_ROOT / "schemas" / "corpus.schema.json"
PREDICTIONS_SCHEMA_PATH = PROJECT_ROOT / "schemas" / "predictions.schema.json"
TABLES_DIR = PACKAGE_DIR / "tables"
IPA_PHONE_TABLE_PATH = Path(os.getenv("IPA_PHONE_TABLE", TABLES_DIR / "ipa_phones.tsv"))
PHONE_GRAPHEME_TABLE_PATH = Path(os.getenv("PHONE_GRAPHEME_TABLE", TABLES_DIR / "phone_graphemes.tsv"))
ERROR_CODE_MAP_PATH = Path(os.getenv("ERROR_CODE_MAP", TABLES_DIR / "error_codes.tsv"))
CHAT_MARKER_TABLE_PATH = Path(os.getenv("CHAT_MARKER_TABLE", TABLES_DIR / "chat_markers.tsv"))

# Utterance filtering (milliseconds)
MIN_DURATION_MS = 750
MAX_DURATION_MS = 10_000

# Participant tier codes kept when reading .cha files
PARTICIPANT_CODES = ("PAR",)

# Subword tokenizer
BOUNDARY_MARKER = "▁"
DEFAULT_VOCAB_SIZE = 500
VOCAB_SWEEP = (100, 500, 1000, 2000)
SEED_MAX_PIECE_LEN = 8
SEED_MIN_FREQUENCY = 2
EM_ITERATIONS = 2
PRUNE_FRACTION = 0.2

# Loss calculus
DEFAULT_CTC_ALPHA = 0.3
LOG_ZERO = -1e9
LOSS_CAP = 1e9
NORMALIZATION_TOLERANCE = 1e-6
BLANK_ID = 0

# Decoding
CTC_WEIGHT_SWEEP = (0.2, 0.3, 0.4)
DEFAULT_CTC_WEIGHT = 0.3
DEFAULT_BEAM_SIZE = 10
DEFAULT_MAX_LEN = 100

# Metrics
DEFAULT_TTR_WINDOWS = (0, 1, 2)
# WAB-R AQ lower bounds: AQ > 75 mild, 50 < AQ <= 75 moderate,
# 25 < AQ <= 50 severe, AQ <= 25 very severe
SEVERITY_THRESHOLDS = (75.0, 50.0, 25.0)

# Corpus folds
SPLIT_RATIOS = (0.7, 0.1, 0.2)
DEFAULT_SEED = 0

# Work pool
MAX_WORKERS = int(os.getenv("MAX_WORKERS", "4"))
