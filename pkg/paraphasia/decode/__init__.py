from .scorer_base import PrefixScorer
from .search import BeamConfig, Hypothesis, beam_search_joint, ctc_prefix_score, greedy_ctc_decode
from .table_scorer import TableScorer, read_table_scorer, write_table_scorer

__all__ = [
    "BeamConfig",
    "Hypothesis",
    "PrefixScorer",
    "TableScorer",
    "beam_search_joint",
    "ctc_prefix_score",
    "greedy_ctc_decode",
    "read_table_scorer",
    "write_table_scorer",
]
