"""Tests for greedy decoding, CTC prefix scores and the joint beam search."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from paraphasia.config import BOUNDARY_MARKER as M
from paraphasia.corpus.synthetic import decode_fixture, reference_transcript
from paraphasia.decode.search import (
    BeamConfig,
    CTCPrefixScorer,
    DecodeItem,
    Hypothesis,
    beam_search_joint,
    ctc_prefix_score,
    greedy_ctc_decode,
    hypothesis_awer,
    pick_ctc_weight,
    sweep_ctc_weight,
)
from paraphasia.decode.table_scorer import TableScorer, read_table_scorer, write_table_scorer
from paraphasia.errors import InvalidDistribution, MalformedAnnotation, UnknownPrefix, UnknownTokenId
from paraphasia.models import Task
from paraphasia.scoring.grid import PosteriorGrid
from paraphasia.scoring.losses import StepDistributions, ctc_forward_loss
from tests.conftest import full_table_scorer, random_grid


def _exhaustive_best(grid, scorer, cfg: BeamConfig) -> float:
    """Best combined score over every hypothesis the search could complete."""
    ctc = CTCPrefixScorer(grid)
    w = cfg.ctc_weight
    symbols = [t for t in range(1, grid.vocab_size) if t != scorer.eos_id]
    best = -math.inf
    for length in range(cfg.max_len + 1):
        for seq in itertools.product(symbols, repeat=length):
            att = sum(float(scorer.score(None, seq[:i]).token_logp[tok]) for i, tok in enumerate(seq))
            complete = ctc.score(seq, complete=True)
            if length == cfg.max_len:
                best = max(best, (1 - w) * att + w * complete)
            elif scorer.eos_id is not None:
                att_eos = att + float(scorer.score(None, seq).token_logp[scorer.eos_id])
                best = max(best, (1 - w) * att_eos + w * complete)
    return best


# =====================================================================
# Greedy decoding
# =====================================================================

class TestGreedy:
    def test_collapse_and_drop_blanks(self):
        rows = []
        for tok in [1, 1, 0, 1, 2, 2, 0]:
            row = np.full(3, 0.1)
            row[tok] = 0.8
            rows.append(row)
        assert greedy_ctc_decode(PosteriorGrid.from_probs(rows)) == [1, 1, 2]

    def test_all_blank(self):
        assert greedy_ctc_decode(PosteriorGrid.from_probs([[0.9, 0.1]] * 4)) == []


# =====================================================================
# CTC prefix scores
# =====================================================================

class TestCtcPrefixScore:
    def test_complete_matches_forward_loss(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            grid = random_grid(rng, int(rng.integers(3, 8)), int(rng.integers(2, 5)))
            target = [int(t) for t in rng.integers(1, grid.vocab_size, size=int(rng.integers(0, 3)))]
            assert ctc_prefix_score(grid, target, complete=True) == pytest.approx(
                -ctc_forward_loss(grid, target), abs=1e-9)

    def test_prefix_mass_splits_over_continuations(self):
        rng = np.random.default_rng(9)
        grid = random_grid(rng, 6, 4)
        ctc = CTCPrefixScorer(grid)
        for prefix in [(), (1,), (2, 2), (3, 1)]:
            whole = math.exp(ctc.score(prefix))
            parts = math.exp(ctc.score(prefix, complete=True)) + sum(
                math.exp(ctc.score(prefix + (c,))) for c in range(1, 4))
            assert whole == pytest.approx(parts, rel=1e-9)

    def test_empty_prefix_is_certain(self, rng):
        assert ctc_prefix_score(random_grid(rng, 4, 3), []) == 0.0

    def test_prefix_scores_never_rise(self, rng):
        ctc = CTCPrefixScorer(random_grid(rng, 6, 3))
        scores = [ctc.score((1, 2, 1, 2)[:k]) for k in range(5)]
        assert all(b <= a + 1e-12 for a, b in zip(scores, scores[1:]))

    def test_rejects_blank(self, rng):
        with pytest.raises(UnknownTokenId):
            ctc_prefix_score(random_grid(rng, 4, 3), [0])


# =====================================================================
# Joint beam search
# =====================================================================

class TestBeamSearch:
    @pytest.mark.parametrize("ctc_weight", [0.0, 0.3, 1.0])
    def test_full_beam_matches_exhaustive_search(self, ctc_weight):
        rng = np.random.default_rng(21)
        for trial in range(30):
            vocab = int(rng.integers(2, 4))
            max_len = int(rng.integers(1, 4))
            eos = vocab - 1 if vocab == 3 and trial % 2 else None
            grid = random_grid(rng, 7, vocab)
            scorer = full_table_scorer(rng, vocab, max_len, eos_id=eos)
            cfg = BeamConfig(beam_size=vocab ** max_len, ctc_weight=ctc_weight, max_len=max_len)
            hyp = beam_search_joint(None, grid, scorer, cfg)
            assert hyp.combined == pytest.approx(_exhaustive_best(grid, scorer, cfg), abs=1e-9)

    def test_wider_beam_finds_better_path(self):
        step = StepDistributions.from_probs
        table = {
            (): step([0.0, 0.6, 0.4], [0.5, 0.5]),
            (1,): step([0.0, 0.5, 0.5], [0.5, 0.5]),
            (2,): step([0.0, 0.9, 0.1], [0.5, 0.5]),
        }
        scorer = TableScorer(table, 3)
        grid = PosteriorGrid.from_probs([[1 / 3, 1 / 3, 1 / 3]] * 5)
        scores = [beam_search_joint(None, grid, scorer, BeamConfig(beam_size=b, ctc_weight=0.0, max_len=2)).combined
                  for b in (1, 2, 4)]
        assert scores[0] == pytest.approx(math.log(0.3))
        assert scores[1] == pytest.approx(math.log(0.36))
        assert scores == sorted(scores)

    def test_labels_follow_para_head(self):
        step = StepDistributions.from_probs
        table = {
            (): step([0.0, 0.9, 0.1], [0.2, 0.8]),
            (1,): step([0.0, 0.1, 0.9], [0.9, 0.1]),
        }
        grid = PosteriorGrid.from_probs([[1 / 3, 1 / 3, 1 / 3]] * 5)
        hyp = beam_search_joint(None, grid, TableScorer(table, 3), BeamConfig(beam_size=1, ctc_weight=0.0, max_len=2))
        assert hyp.tokens == (1, 2)
        assert hyp.para_labels == (1, 0)

    def test_wider_beam_never_scores_worse(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            vocab = int(rng.integers(2, 4))
            max_len = int(rng.integers(1, 4))
            grid = random_grid(rng, 7, vocab)
            scorer = full_table_scorer(rng, vocab, max_len)
            scores = [
                beam_search_joint(None, grid, scorer, BeamConfig(beam_size=b, ctc_weight=0.0, max_len=max_len)).combined
                for b in range(1, vocab ** max_len + 1)
            ]
            assert all(later >= earlier - 1e-12 for earlier, later in zip(scores, scores[1:]))

    def test_para_head_never_changes_tokens(self):
        rng = np.random.default_rng(29)
        for trial in range(100):
            vocab = int(rng.integers(2, 5))
            max_len = int(rng.integers(1, 4))
            eos = vocab - 1 if vocab > 2 and trial % 2 else None
            grid = random_grid(rng, 7, vocab)
            scorer = full_table_scorer(rng, vocab, max_len, eos_id=eos)
            relabelled = TableScorer(
                {p: StepDistributions(scorer.score(None, p).token_logp, np.log(rng.dirichlet(np.ones(2))))
                 for p in scorer.prefixes()},
                vocab, eos_id=eos,
            )
            cfg = BeamConfig(beam_size=int(rng.integers(1, 5)), ctc_weight=float(rng.random()), max_len=max_len)
            assert (beam_search_joint(None, grid, relabelled, cfg).tokens
                    == beam_search_joint(None, grid, scorer, cfg).tokens)

    def test_recovers_fixture_reference(self, synthetic_manifest):
        rng = np.random.default_rng(0)
        positives = Task.PHN_NEO.positive_classes
        for utt in synthetic_manifest.utterances[:6]:
            grid, scorer = decode_fixture(utt, positives, rng)
            hyp = beam_search_joint(None, grid, scorer, BeamConfig(beam_size=5, ctc_weight=0.3, max_len=40))
            assert hypothesis_awer(grid, hyp) == reference_transcript(utt, positives)

    def test_vocabulary_mismatch(self, rng):
        scorer = full_table_scorer(rng, 3, 1)
        with pytest.raises(InvalidDistribution):
            beam_search_joint(None, random_grid(rng, 4, 4), scorer)

    @pytest.mark.parametrize("kwargs", [{"beam_size": 0}, {"max_len": 0}, {"ctc_weight": 1.5}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            BeamConfig(**kwargs)

    def test_hypothesis_lengths_checked(self):
        with pytest.raises(ValueError):
            Hypothesis((1, 2), (0,), 0.0, 0.0, 0.0)


# =====================================================================
# Weight selection
# =====================================================================

class TestCtcWeight:
    def test_pick_lowest_wer(self):
        assert pick_ctc_weight({0.2: 0.5, 0.3: 0.4, 0.4: 0.45}) == 0.3

    def test_ties_go_to_smaller_weight(self):
        assert pick_ctc_weight({0.4: 0.4, 0.3: 0.4, 0.2: 0.5}) == 0.3

    def test_no_weights(self):
        with pytest.raises(ValueError):
            pick_ctc_weight({})

    def test_sweep(self, synthetic_manifest):
        rng = np.random.default_rng(0)
        positives = Task.PHN_NEO.positive_classes
        items = []
        for utt in synthetic_manifest.utterances[:4]:
            grid, scorer = decode_fixture(utt, positives, rng)
            items.append(DecodeItem(None, grid, scorer, tuple(w.word for w in utt.words)))
        result = sweep_ctc_weight(items, [0.4, 0.2, 0.3], beam_size=4, max_len=40)
        assert sorted(result.wer_by_weight) == [0.2, 0.3, 0.4]
        assert result.best_weight == pick_ctc_weight(result.wer_by_weight)

    def test_hypothesis_awer(self):
        grid = PosteriorGrid.from_probs([[0.5, 0.25, 0.25]], vocabulary=["<blank>", M + "ef", "ezia"])
        hyp = Hypothesis((1, 2), (0, 1), 0.0, 0.0, 0.0)
        assert str(hypothesis_awer(grid, hyp)) == "efezia/1"


# =====================================================================
# Table scorer files
# =====================================================================

class TestTableScorer:
    def test_write_read(self, rng, tmp_path):
        default = StepDistributions.from_probs([0.0, 0.5, 0.5], [0.5, 0.5])
        scorer = full_table_scorer(rng, 3, 2, eos_id=2)
        scorer = TableScorer({p: scorer.score(None, p) for p in scorer.prefixes()}, 3, eos_id=2, default=default)
        loaded = read_table_scorer(write_table_scorer(scorer, tmp_path / "s" / "u.scorer"))
        assert loaded.eos_id == 2
        assert loaded.prefixes() == scorer.prefixes()
        for prefix in scorer.prefixes() + [(1, 1, 1)]:
            assert np.array_equal(loaded.score(None, prefix).token_logp, scorer.score(None, prefix).token_logp)
            assert np.array_equal(loaded.score(None, prefix).para_logp, scorer.score(None, prefix).para_logp)

    def test_unknown_prefix(self, rng):
        scorer = full_table_scorer(rng, 3, 1)
        with pytest.raises(UnknownPrefix):
            scorer.score(None, (1, 1))

    def test_eos_must_be_non_blank(self, rng):
        with pytest.raises(InvalidDistribution):
            TableScorer({}, 3, eos_id=0)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.scorer"
        path.write_text("V=3 eos=none\n-\t0.0 -inf\n", encoding="utf-8")
        with pytest.raises(MalformedAnnotation):
            read_table_scorer(path)
