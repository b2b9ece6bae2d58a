"""Reference scorers, their oracles, and batch-scorer equivalence."""

from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keybeam.corpus import (
    ProcessedSentence,
    RawSentence,
    StopwordList,
    build_index,
    build_vocabulary,
    default_lemma_dictionary,
    preprocess,
)
from keybeam.matcher import build_automaton, count_occurrences
from keybeam.scoring import (
    CombinationQuery,
    ac_score,
    build_tfidf_model,
    levenshtein_score,
    make_scorer,
    rank_sentences,
    tfidf_score,
    token_edit_distance,
    _topk_sums,
    _topk_sums_int,
)
from keybeam.synthetic import synthetic_index


def make_index(lemma_rows, texts=None):
    sentences = [
        ProcessedSentence(
            id=f"s{i:02d}",
            lemmas=tuple(lemmas),
            original_text=(texts[i] if texts else " ".join(lemmas)),
        )
        for i, lemmas in enumerate(lemma_rows)
    ]
    distinct = {lemma for row in lemma_rows for lemma in row}
    return build_index(
        sentences, build_vocabulary(sentences, top_v=max(len(distinct), 1))
    )


FIG_INDEX = make_index(
    [
        ("during", "time", "work", "company"),   # the only all-three sentence
        ("may", "house", "star"),
        ("time", "nation", "award"),
        ("work", "star", "war"),
        ("during", "house", "nation"),
        ("award", "war", "her"),
    ]
)


class TestAcScore:
    def test_all_keywords_sentence_is_strict_max(self):
        score = ac_score(CombinationQuery(("during", "time", "work")), FIG_INDEX)
        assert score.per_sentence[0][0] == "s00"
        assert score.per_sentence[0][1] > score.per_sentence[1][1]

    def test_no_hits_scores_zero(self):
        score = ac_score(CombinationQuery(("zzz",)), FIG_INDEX, m_score=3)
        assert score.value == 0.0
        assert score.per_sentence == ()

    def test_empty_query_rejected(self):
        with pytest.raises(ValueError):
            ac_score(CombinationQuery(()), FIG_INDEX)

    def test_empty_corpus_scores_zero(self):
        empty = make_index([])
        assert ac_score(CombinationQuery(("a",)), empty).value == 0.0

    def test_value_is_mean_of_top_counts(self):
        # counts: s00 -> 3, everything else below
        score = ac_score(CombinationQuery(("during", "time", "work")), FIG_INDEX, m_score=2)
        counts = sorted(
            (sum(count_occurrences(build_automaton(["during", "time", "work"]), s))
             for s in FIG_INDEX.sentences),
            reverse=True,
        )
        assert score.value == pytest.approx(sum(counts[:2]) / 2)

    def test_distinct_mode_on_preprocessed_sentence(self):
        # computed with the naive-scan oracle below: "award" and "her" occur
        # in the lemma sequence, "war" does not, so 2 distinct keywords hit
        text = (
            "hepburn win an emmy award in 19xx for her lead role in love among "
            "the ruin and be nominate for four other emmy and two tony award "
            "during the course of her more than 70 year act career"
        )
        lemmas = preprocess(
            RawSentence(id="h", text=text),
            default_lemma_dictionary(),
            StopwordList({"the", "a", "an", "is"}),
        ).lemmas
        assert [sum(tok == kw for tok in lemmas) > 0 for kw in ("award", "war", "her")] == [
            True, False, True,
        ]
        index = make_index([lemmas])
        score = ac_score(
            CombinationQuery(("award", "war", "her")), index, count_mode="distinct"
        )
        assert score.per_sentence == (("s00", 2.0),)

    def test_multiplicity_counts_repeats(self):
        index = make_index([("ford", "motor", "ford", "company", "ford")])
        q = CombinationQuery(("ford", "company"))
        mult = ac_score(q, index, count_mode="multiplicity")
        dist = ac_score(q, index, count_mode="distinct")
        assert mult.per_sentence[0][1] == 4.0  # 3x ford + 1x company
        assert dist.per_sentence[0][1] == 2.0

    def test_repeated_query_keyword_double_counts(self):
        index = make_index([("star", "war")])
        q = CombinationQuery(("star", "star"))
        assert ac_score(q, index).per_sentence[0][1] == 2.0

    def test_pruned_equals_full_scan(self):
        rng = np.random.default_rng(0)
        lemmas = list(FIG_INDEX.vocabulary.lemmas)
        for _ in range(50):
            q = CombinationQuery(
                tuple(rng.choice(lemmas, size=rng.integers(1, 5), replace=True))
            )
            for mode in ("multiplicity", "distinct"):
                got = ac_score(q, FIG_INDEX, m_score=3, count_mode=mode)
                automaton = build_automaton(list(q.keywords))
                full = []
                for s in FIG_INDEX.sentences:
                    occ = count_occurrences(automaton, s)
                    count = (
                        sum(occ)
                        if mode == "multiplicity"
                        else len({automaton.patterns[i] for i, c in enumerate(occ) if c})
                    )
                    if count:
                        full.append((s.id, float(count)))
                full.sort(key=lambda it: (-it[1], it[0]))
                value = sum(c for _, c in full[:3]) / min(3, len(FIG_INDEX))
                assert got.per_sentence == tuple(full[:3])
                assert got.value == pytest.approx(value)

    @given(
        st.lists(
            st.sampled_from(["during", "time", "work", "star", "war", "award"]),
            min_size=1,
            max_size=4,
        ),
        st.sampled_from(["during", "time", "work", "star", "war", "award"]),
    )
    @settings(max_examples=60)
    def test_multiplicity_monotone_in_appended_keyword(self, keywords, extra):
        base = CombinationQuery(tuple(keywords))
        extended = CombinationQuery(tuple(keywords) + (extra,))
        before = dict(ac_score(base, FIG_INDEX, m_score=10).per_sentence)
        after = dict(ac_score(extended, FIG_INDEX, m_score=10).per_sentence)
        for sid, count in before.items():
            assert after.get(sid, 0.0) >= count


def edit_distance_oracle(a, b):
    """Independent memoized recursion, structurally unlike the DP."""

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            rec(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
            rec(i - 1, j) + 1,
            rec(i, j - 1) + 1,
        )

    return rec(len(a), len(b))


class TestLevenshtein:
    def test_identity(self):
        s = ProcessedSentence(id="x", lemmas=("a", "b"), original_text="")
        assert levenshtein_score(CombinationQuery(("a", "b")), s) == 0

    def test_empty_query_costs_length(self):
        s = ProcessedSentence(id="x", lemmas=("a", "b", "c"), original_text="")
        assert levenshtein_score(CombinationQuery(()), s) == 3

    def test_single_insertion(self):
        s = ProcessedSentence(id="x", lemmas=("during", "time", "work"), original_text="")
        assert levenshtein_score(CombinationQuery(("time", "work")), s) == 1

    @given(
        st.lists(st.sampled_from("abc"), max_size=7),
        st.lists(st.sampled_from("abc"), max_size=7),
    )
    @settings(max_examples=100)
    def test_matches_recursive_oracle(self, a, b):
        assert token_edit_distance(a, b) == edit_distance_oracle(tuple(a), tuple(b))

    @given(
        st.lists(st.sampled_from("ab"), max_size=5),
        st.lists(st.sampled_from("ab"), max_size=5),
        st.lists(st.sampled_from("ab"), max_size=5),
    )
    @settings(max_examples=100)
    def test_metric_axioms(self, a, b, c):
        d_ab = token_edit_distance(a, b)
        assert (d_ab == 0) == (a == b)
        assert d_ab == token_edit_distance(b, a)
        assert d_ab <= token_edit_distance(a, c) + token_edit_distance(c, b)


class TestTfidf:
    def test_full_bag_query_is_collinear(self):
        index = make_index([("star", "war", "star"), ("time", "work")])
        model = build_tfidf_model(index)
        q = CombinationQuery(("star", "war", "star"))
        assert tfidf_score(q, index.sentence("s00"), model) == pytest.approx(1.0)

    def test_disjoint_support_is_zero(self):
        index = make_index([("star", "war"), ("time", "work")])
        model = build_tfidf_model(index)
        q = CombinationQuery(("time", "work"))
        assert tfidf_score(q, index.sentence("s00"), model) == 0.0

    def test_two_sentence_hand_computed(self):
        # df(star)=1, df(time)=2, df(work)=1 over N=2 sentences
        index = make_index([("star", "time"), ("time", "work")])
        model = build_tfidf_model(index)
        idf_star, idf_work = np.log(2.0), np.log(2.0)
        # idf(time) = ln(2/2) = 0, so "time" drops out of every vector
        q = CombinationQuery(("star", "time"))
        expected_s0 = (idf_star * idf_star) / (idf_star * idf_star)
        assert tfidf_score(q, index.sentence("s00"), model) == pytest.approx(expected_s0)
        assert tfidf_score(q, index.sentence("s01"), model) == 0.0

    def test_zero_norm_query_is_zero_not_nan(self):
        index = make_index([("star", "war"), ("time", "work")])
        model = build_tfidf_model(index)
        got = tfidf_score(CombinationQuery(("zzz",)), index.sentence("s00"), model)
        assert got == 0.0

    @given(
        st.lists(
            st.sampled_from(["star", "war", "time", "work", "award"]),
            min_size=1,
            max_size=5,
        )
    )
    @settings(max_examples=60)
    def test_bounded_and_unit_on_collinear(self, keywords):
        index = make_index([("star", "war", "time"), ("work", "award"), ("war", "work")])
        model = build_tfidf_model(index)
        for s in index.sentences:
            val = tfidf_score(CombinationQuery(tuple(keywords)), s, model)
            assert 0.0 <= val <= 1.0 + 1e-12


class TestRankSentences:
    def test_single_match_first(self):
        ranking = rank_sentences(CombinationQuery(("her",)), FIG_INDEX, method="ac")
        assert ranking[0] == ("s05", 1.0)

    def test_all_zero_scores_fall_back_to_id_order(self):
        ranking = rank_sentences(CombinationQuery(("zzz",)), FIG_INDEX, method="ac")
        assert [sid for sid, _ in ranking] == [s.id for s in FIG_INDEX.sentences]
        assert all(score == 0.0 for _, score in ranking)

    def test_levenshtein_orders_ascending(self):
        ranking = rank_sentences(
            CombinationQuery(("during", "time", "work", "company")),
            FIG_INDEX,
            method="levenshtein",
        )
        assert ranking[0] == ("s00", 0.0)
        assert all(a[1] <= b[1] for a, b in zip(ranking, ranking[1:]))

    def test_agrees_with_exhaustive_scoring(self):
        index = synthetic_index(50, vocab_size=40, length_range=(3, 8), seed=9)
        model = build_tfidf_model(index)
        rng = np.random.default_rng(1)
        lemmas = list(index.vocabulary.lemmas)
        for _ in range(10):
            q = CombinationQuery(
                tuple(rng.choice(lemmas, size=rng.integers(1, 5), replace=True))
            )
            got = rank_sentences(q, index, method="tfidf", model=model)
            brute = sorted(
                ((s.id, tfidf_score(q, s, model)) for s in index.sentences),
                key=lambda it: (-it[1], it[0]),
            )
            assert got == brute
            got_ld = rank_sentences(q, index, method="ld")
            brute_ld = sorted(
                ((s.id, float(levenshtein_score(q, s))) for s in index.sentences),
                key=lambda it: (it[1], it[0]),
            )
            assert got_ld == brute_ld

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            rank_sentences(CombinationQuery(("a",)), FIG_INDEX, method="bm25")


class TestBatchScorerEquivalence:
    """The sparse/vectorized engines must match the reference scorers."""

    def _random_queries(self, index, n, seed, max_len=6):
        rng = np.random.default_rng(seed)
        lemmas = list(index.vocabulary.lemmas) + ["zzz"]
        return [
            CombinationQuery(
                tuple(rng.choice(lemmas, size=rng.integers(1, max_len), replace=True))
            )
            for _ in range(n)
        ]

    def test_ac_scorer_matches_ac_score(self):
        index = synthetic_index(60, vocab_size=50, length_range=(3, 9), seed=3)
        for mode in ("multiplicity", "distinct"):
            scorer = make_scorer("ac", index, m_score=5, count_mode=mode)
            for q in self._random_queries(index, 40, seed=11):
                got = scorer.score_query(q)
                want = ac_score(q, index, m_score=5, count_mode=mode)
                assert got.value == pytest.approx(want.value, abs=1e-12)
                assert got.per_sentence == want.per_sentence

    def test_ac_rank_query_matches_rank_sentences(self):
        index = synthetic_index(60, vocab_size=50, length_range=(3, 9), seed=3)
        scorer = make_scorer("ac", index)
        for q in self._random_queries(index, 20, seed=12):
            got = scorer.rank_query(q)
            reference = [
                (sid, score)
                for sid, score in rank_sentences(q, index, method="ac")
                if score > 0
            ]
            assert got == reference

    def test_ld_scorer_matches_reference(self):
        index = synthetic_index(40, vocab_size=50, length_range=(3, 9), seed=4)
        scorer = make_scorer("ld", index, m_score=4)
        for q in self._random_queries(index, 25, seed=13):
            got = scorer.score_query(q)
            reference = sorted(
                ((float(levenshtein_score(q, s)), s.id) for s in index.sentences)
            )[:4]
            assert got.per_sentence == tuple((sid, d) for d, sid in reference)
            assert got.value == pytest.approx(-np.mean([d for d, _ in reference]))

    def test_tfidf_scorer_matches_reference(self):
        index = synthetic_index(40, vocab_size=50, length_range=(3, 9), seed=5)
        scorer = make_scorer("tfidf", index, m_score=4)
        model = build_tfidf_model(index)
        for q in self._random_queries(index, 25, seed=14):
            got = dict(scorer.rank_query(q))
            for sid, sim in got.items():
                assert sim == pytest.approx(
                    tfidf_score(q, index.sentence(sid), model), abs=1e-12
                )

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            make_scorer("bm25", FIG_INDEX)


class TestTopkSums:
    @given(
        st.lists(
            st.lists(st.integers(min_value=1, max_value=9), max_size=12),
            min_size=1,
            max_size=8,
        ),
        st.integers(min_value=1, max_value=6),
    )
    @settings(max_examples=100)
    def test_int_histogram_equals_sort_path(self, rows, k):
        data = np.array([v for row in rows for v in row], dtype=np.float64)
        indptr = np.cumsum([0] + [len(row) for row in rows])
        got = _topk_sums_int(data, indptr, len(rows), k)
        want = _topk_sums(data, indptr, len(rows), k)
        brute = np.array([sum(sorted(row, reverse=True)[:k]) for row in rows], float)
        np.testing.assert_allclose(got, brute)
        np.testing.assert_allclose(want, brute)
