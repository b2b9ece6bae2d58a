"""Ranking metrics and BLEU."""

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keybeam.evaluation import (
    RankedPrediction,
    RetrievalJudgment,
    bleu,
    mean_precision_at_n,
    mean_recall_at_n,
    precision_at_n,
    recall_at_n,
    top_k_accuracy,
)


def reference_bleu(candidate, reference, max_n):
    """Independent BLEU oracle built directly from the metric's definition."""
    if not candidate:
        return 0.0
    logs = []
    for n in range(1, max_n + 1):
        cand_grams = Counter(
            tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1)
        )
        ref_grams = Counter(
            tuple(reference[i : i + n]) for i in range(len(reference) - n + 1)
        )
        overlap = sum((cand_grams & ref_grams).values())
        total = sum(cand_grams.values())
        if overlap == 0 or total == 0:
            return 0.0
        logs.append(math.log(overlap / total) / max_n)
    bp = (
        math.exp(1.0 - len(reference) / len(candidate))
        if len(candidate) < len(reference)
        else 1.0
    )
    return bp * math.exp(sum(logs))


class TestTopKAccuracy:
    def test_truth_always_first(self):
        preds = [RankedPrediction(candidates=("a", "b"), ground_truth="a")] * 4
        assert top_k_accuracy(preds, 1) == 1.0

    def test_hand_built_fixture(self):
        preds = [
            RankedPrediction(candidates=("a", "b", "c"), ground_truth="a"),  # rank 1
            RankedPrediction(candidates=("b", "a", "c"), ground_truth="a"),  # rank 2
            RankedPrediction(candidates=("b", "c", "a"), ground_truth="a"),  # rank 3
            RankedPrediction(candidates=("b", "c", "d"), ground_truth="a"),  # miss
        ]
        assert top_k_accuracy(preds, 1) == 0.25
        assert top_k_accuracy(preds, 2) == 0.5
        assert top_k_accuracy(preds, 3) == 0.75

    def test_uniform_random_ranking_matches_k_over_v(self):
        rng = np.random.default_rng(0)
        vocab = [f"w{i}" for i in range(100)]
        preds = []
        for _ in range(20_000):
            order = rng.permutation(100)
            preds.append(
                RankedPrediction(
                    candidates=tuple(vocab[i] for i in order[:20]),
                    ground_truth="w0",
                )
            )
        assert abs(top_k_accuracy(preds, 10) - 0.10) < 0.01

    def test_monotone_in_k(self):
        rng = np.random.default_rng(1)
        vocab = [f"w{i}" for i in range(30)]
        preds = [
            RankedPrediction(
                candidates=tuple(np.array(vocab)[rng.permutation(30)][:10]),
                ground_truth="w3",
            )
            for _ in range(300)
        ]
        values = [top_k_accuracy(preds, k) for k in range(1, 11)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_rejects_empty_input(self):
        with pytest.raises(ValueError):
            top_k_accuracy([], 1)

    def test_rejects_duplicate_candidates(self):
        with pytest.raises(ValueError):
            RankedPrediction(candidates=("a", "a"), ground_truth="a")


class TestRecallPrecision:
    def test_hit_in_top_n(self):
        j = RetrievalJudgment(retrieved=("x", "y", "z"), relevant=frozenset({"x"}))
        assert recall_at_n(j, 5) == 1
        assert precision_at_n(j, 5) == 0.2

    def test_miss_below_cutoff(self):
        j = RetrievalJudgment(
            retrieved=("a", "b", "c", "d", "e", "x"), relevant=frozenset({"x"})
        )
        assert recall_at_n(j, 5) == 0
        assert recall_at_n(j, 6) == 1

    def test_duplicate_corpus_fills_precision(self):
        j = RetrievalJudgment(
            retrieved=("d1", "d2", "z", "d3", "q"),
            relevant=frozenset({"d1", "d2", "d3"}),
        )
        assert precision_at_n(j, 5) == pytest.approx(0.6)

    def test_aggregates_are_means(self):
        judgments = [
            RetrievalJudgment(retrieved=("x",), relevant=frozenset({"x"})),
            RetrievalJudgment(retrieved=("y",), relevant=frozenset({"x"})),
            RetrievalJudgment(retrieved=("x",), relevant=frozenset({"x"})),
            RetrievalJudgment(retrieved=("z",), relevant=frozenset({"x"})),
        ]
        assert mean_recall_at_n(judgments, 1) == 0.5
        assert mean_precision_at_n(judgments, 1) == 0.5

    def test_mixed_fixture_manual_tally(self):
        judgments = []
        hits = [True, False, True, True, False, False, True, False]
        for i, hit in enumerate(hits):
            retrieved = (f"gt{i}",) if hit else (f"other{i}",)
            judgments.append(
                RetrievalJudgment(
                    retrieved=retrieved + ("pad1", "pad2", "pad3", "pad4"),
                    relevant=frozenset({f"gt{i}"}),
                )
            )
        assert mean_recall_at_n(judgments, 5) == pytest.approx(4 / 8)

    @given(
        st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=8, unique=True),
        st.sampled_from("abcdefgh"),
        st.integers(min_value=1, max_value=8),
    )
    @settings(max_examples=100)
    def test_singleton_relevant_ties_precision_to_recall(self, retrieved, gt, n):
        j = RetrievalJudgment(retrieved=tuple(retrieved), relevant=frozenset({gt}))
        assert precision_at_n(j, n) == recall_at_n(j, n) / n

    @given(
        st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=8, unique=True),
        st.sets(st.sampled_from("abcdefgh"), min_size=1, max_size=4),
    )
    @settings(max_examples=100)
    def test_recall_monotone_in_n(self, retrieved, relevant):
        j = RetrievalJudgment(retrieved=tuple(retrieved), relevant=frozenset(relevant))
        values = [recall_at_n(j, n) for n in range(1, 9)]
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestBleu:
    def test_identical_is_one(self):
        tokens = ["the", "cat", "sat", "down"]
        assert bleu(tokens, tokens, max_n=4) == pytest.approx(1.0)

    def test_no_overlap_is_zero(self):
        assert bleu(["dog"], ["cat"], max_n=1) == 0.0

    def test_brevity_penalty_hand_computed(self):
        got = bleu(["the", "cat", "sat"], ["the", "cat", "sat", "down"], max_n=1)
        assert got == pytest.approx(math.exp(1 - 4 / 3), abs=1e-12)

    def test_zero_four_gram_overlap_zeroes_bleu4(self):
        candidate = ["a", "b", "c", "x", "d", "e", "f"]
        reference = ["a", "b", "c", "d", "e", "f", "g"]
        assert bleu(candidate, reference, max_n=4) == 0.0
        assert bleu(candidate, reference, max_n=1) > 0.0

    def test_empty_candidate_is_zero(self):
        assert bleu([], ["a"], max_n=1) == 0.0

    def test_not_symmetric(self):
        a = ["x", "y"]
        b = ["x", "y", "z", "w"]
        assert bleu(a, b, max_n=1) != bleu(b, a, max_n=1)

    def test_clipping_limits_repeats(self):
        # "the" appears once in the reference, so only one of the three counts
        got = bleu(["the", "the", "the"], ["the", "cat"], max_n=1)
        assert got == pytest.approx(1 / 3)

    def test_matches_independent_oracle(self):
        rng = np.random.default_rng(3)
        vocab = ["a", "b", "c", "d", "e"]
        for _ in range(100):
            cand = list(rng.choice(vocab, size=rng.integers(1, 10)))
            ref = list(rng.choice(vocab, size=rng.integers(1, 10)))
            for max_n in (1, 2, 3, 4):
                got = bleu(cand, ref, max_n=max_n)
                want = reference_bleu(cand, ref, max_n)
                assert got == pytest.approx(want, abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(4)
        vocab = ["a", "b", "c"]
        for _ in range(100):
            cand = list(rng.choice(vocab, size=rng.integers(1, 8)))
            ref = list(rng.choice(vocab, size=rng.integers(1, 8)))
            assert 0.0 <= bleu(cand, ref, max_n=2) <= 1.0

    def test_bad_max_n_rejected(self):
        with pytest.raises(ValueError):
            bleu(["a"], ["a"], max_n=5)
