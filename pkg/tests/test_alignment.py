"""Tests for Levenshtein alignment, WER and AWER."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import pytest

from paraphasia.errors import EmptyReference
from paraphasia.labels import AwerTranscript
from paraphasia.metrics.alignment import (
    EditKind,
    align_edit,
    awer,
    edit_distance_matrix,
    render_alignment,
    wer,
)


def _naive_distance(ref, hyp) -> int:
    @lru_cache(maxsize=None)
    def dist(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            dist(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1]),
            dist(i, j - 1) + 1,
            dist(i - 1, j) + 1,
        )
    return dist(len(ref), len(hyp))


def _apply(ops, ref, hyp):
    """Rebuild the hypothesis from the reference by replaying the ops."""
    out = []
    for op in ops:
        if op.kind is EditKind.MATCH:
            out.append(ref[op.ref_index])
        elif op.kind in (EditKind.SUBSTITUTE, EditKind.INSERT):
            out.append(hyp[op.hyp_index])
    return out


# =====================================================================
# align_edit
# =====================================================================

class TestAlignEdit:
    def test_identical(self):
        alignment = align_edit(["a", "b", "c"], ["a", "b", "c"])
        assert alignment.cost == 0
        assert all(op.kind is EditKind.MATCH for op in alignment.ops)

    def test_delete_then_match(self):
        ops = align_edit(["a", "b"], ["b"]).ops
        assert [op.kind for op in ops] == [EditKind.DELETE, EditKind.MATCH]
        assert (ops[0].ref_index, ops[1].ref_index, ops[1].hyp_index) == (0, 1, 0)

    def test_prefers_substitution_over_insert_delete(self):
        ops = align_edit(["a"], ["b"]).ops
        assert [op.kind for op in ops] == [EditKind.SUBSTITUTE]

    def test_empty_sides(self):
        assert [op.kind for op in align_edit([], ["x", "y"]).ops] == [EditKind.INSERT] * 2
        assert [op.kind for op in align_edit(["x"], []).ops] == [EditKind.DELETE]

    def test_cost_matches_naive_recursion(self):
        rng = np.random.default_rng(17)
        alphabet = ["a", "b", "c"]
        for _ in range(500):
            ref = [alphabet[int(i)] for i in rng.integers(3, size=int(rng.integers(0, 9)))]
            hyp = [alphabet[int(i)] for i in rng.integers(3, size=int(rng.integers(0, 9)))]
            alignment = align_edit(ref, hyp)
            assert alignment.cost == _naive_distance(tuple(ref), tuple(hyp))
            assert alignment.cost == edit_distance_matrix(ref, hyp)[-1, -1]
            assert _apply(alignment.ops, ref, hyp) == hyp

    def test_counts(self):
        alignment = align_edit(["a", "b", "c", "d"], ["a", "x", "c"])
        assert (alignment.substitutions, alignment.insertions, alignment.deletions) == (1, 0, 1)


# =====================================================================
# WER / AWER
# =====================================================================

class TestWer:
    def test_identical(self):
        assert wer(["i", "have", "it"], ["i", "have", "it"]) == 0.0

    def test_one_substitution(self):
        assert wer(["i", "have", "it"], ["i", "had", "it"]) == pytest.approx(1 / 3)

    def test_transcription_example(self):
        assert wer(["i", "han", "asferaja"], ["i", "have", "afasa"]) == pytest.approx(2 / 3)

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            wer([], ["a"])


class TestAwer:
    def test_identical(self):
        t = AwerTranscript.parse("i/0 have/0 efezia/1")
        assert awer(t, t) == 0.0

    def test_transcription_example(self):
        ref = AwerTranscript.parse("i/0 han/1 asferaja/1")
        hyp = AwerTranscript.parse("i/0 have/1 afasa/1")
        assert awer(ref, hyp) == pytest.approx(2 / 3)
        assert awer(ref, hyp) == _naive_distance(tuple(ref.composite()), tuple(hyp.composite())) / 3

    def test_flipped_label_counts_as_error(self):
        ref = AwerTranscript.parse("i/0 have/0 efezia/1")
        hyp = AwerTranscript.parse("i/0 have/0 efezia/0")
        assert awer(ref, hyp) == pytest.approx(1 / 3)
        assert wer(ref.words, hyp.words) == 0.0

    def test_shared_suffix_never_raises_awer(self):
        rng = np.random.default_rng(4)
        words = ["i", "have", "a", "dog", "cat"]
        for _ in range(200):
            ref = [(words[int(i)], int(rng.integers(2))) for i in rng.integers(5, size=int(rng.integers(1, 6)))]
            hyp = [(words[int(i)], int(rng.integers(2))) for i in rng.integers(5, size=int(rng.integers(0, 6)))]
            suffix = [(words[int(i)], int(rng.integers(2))) for i in rng.integers(5, size=int(rng.integers(1, 4)))]
            before = awer(AwerTranscript(tuple(ref)), AwerTranscript(tuple(hyp)))
            after = awer(AwerTranscript(tuple(ref + suffix)), AwerTranscript(tuple(hyp + suffix)))
            assert after <= before + 1e-12

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            awer(AwerTranscript(), AwerTranscript.parse("a/0"))


class TestRenderAlignment:
    def test_eps_fills_gaps(self):
        top, bottom = render_alignment(["a", "b"], ["b"])
        assert top.split() == ["a", "b"]
        assert bottom.split() == ["<eps>", "b"]
        assert top.index("b") == bottom.index("b")
