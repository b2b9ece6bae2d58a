"""Beam search retrieval, the greedy baseline, and their file formats."""

import itertools
import json

import numpy as np
import pytest

from keybeam.corpus import ProcessedSentence, build_index, build_vocabulary
from keybeam.errors import DataError
from keybeam.retrieval import (
    Beam,
    KeywordSequence,
    KeywordSet,
    bsr,
    expand,
    greedy_retrieve,
    keyword_sequence_from_record,
    keyword_sequence_to_record,
    prune,
    read_keyword_sequences,
    read_result_records,
    result_to_record,
    write_keyword_sequences,
    write_results,
)
from keybeam.scoring import EMPTY_QUERY, CombinationQuery, ac_score, make_scorer
from keybeam.simulator import (
    ClassifierProfile,
    derive_rank_distribution,
    simulate_corpus,
)
from keybeam.synthetic import synthetic_index


def make_index(lemma_rows):
    sentences = [
        ProcessedSentence(id=f"s{i:02d}", lemmas=tuple(r), original_text=" ".join(r))
        for i, r in enumerate(lemma_rows)
    ]
    distinct = {lemma for row in lemma_rows for lemma in row}
    return build_index(
        sentences, build_vocabulary(sentences, top_v=max(len(distinct), 1))
    )


def ks(words, position=0):
    n = len(words)
    probs = [0.5 * (0.5 ** i) for i in range(n)]
    return KeywordSet(candidates=tuple(zip(words, probs)), position=position)


class TestKeywordSetValidation:
    def test_probabilities_must_descend(self):
        with pytest.raises(ValueError, match="descending"):
            KeywordSet(candidates=(("a", 0.2), ("b", 0.5)))

    def test_lemmas_must_be_distinct(self):
        with pytest.raises(ValueError, match="distinct"):
            KeywordSet(candidates=(("a", 0.5), ("a", 0.3)))

    def test_probabilities_in_unit_interval(self):
        with pytest.raises(ValueError, match="0, 1"):
            KeywordSet(candidates=(("a", 1.5),))

    def test_needs_candidates(self):
        with pytest.raises(ValueError):
            KeywordSet(candidates=())


class TestExpand:
    def test_initial_beam_produces_singletons(self):
        got = expand([EMPTY_QUERY], ks(["may", "house", "nation"]))
        assert [q.keywords for q in got] == [("may",), ("house",), ("nation",)]

    def test_cartesian_product_size(self):
        beam = [CombinationQuery(("a",)), CombinationQuery(("b",))]
        got = expand(beam, ks(["x", "y", "z"], position=1))
        assert len(got) == 6

    def test_provenance_records_set_and_rank(self):
        got = expand([EMPTY_QUERY], ks(["may", "house"], position=3))
        assert got[0].provenance == ((3, 0),)
        assert got[1].provenance == ((3, 1),)

    def test_k_used_truncates(self):
        got = expand([EMPTY_QUERY], ks(["a", "b", "c"]), k_used=2)
        assert [q.keywords for q in got] == [("a",), ("b",)]


class TestPrune:
    def _index(self):
        # single-keyword query values (m_score=5, 6 sentences):
        # [alpha] -> 3/5, [beta] -> 2/5, [gamma] -> 2/5, [delta] -> 0
        return make_index(
            [
                ("alpha", "beta"),
                ("alpha", "gamma"),
                ("alpha",),
                ("beta", "gamma"),
                ("pad1",),
                ("pad2",),
            ]
        )

    def test_keeps_best_with_lexicographic_ties(self):
        index = self._index()
        candidates = [
            CombinationQuery(("delta",)),
            CombinationQuery(("gamma",)),
            CombinationQuery(("beta",)),
            CombinationQuery(("alpha",)),
        ]
        beam = prune(candidates, index, scorer="ac", width=2)
        assert [q.keywords for q in beam.queries()] == [("alpha",), ("beta",)]

    def test_width_larger_than_candidates_keeps_all(self):
        index = self._index()
        candidates = [CombinationQuery(("alpha",)), CombinationQuery(("beta",))]
        beam = prune(candidates, index, scorer="ac", width=10)
        assert len(beam.entries) == 2

    def test_rejects_bad_width(self):
        with pytest.raises(ValueError):
            prune([], self._index(), scorer="ac", width=0)


WALKTHROUGH_INDEX = make_index(
    [
        ("during", "time", "work", "company"),
        ("may", "become", "star"),
        ("house", "nation", "award"),
        ("time", "war", "her"),
        ("work", "river", "stone"),
        ("during", "fall", "rain"),
    ]
)

# three keyword sets whose top-1 candidates are all wrong, with the truth
# (during, time, work) hidden at ranks 3, 2, 3
WALKTHROUGH_SETS = KeywordSequence(
    sets=(
        ks(["may", "house", "during"], position=0),
        ks(["nation", "time", "become"], position=1),
        ks(["award", "star", "work"], position=2),
    ),
    sentence_id="s00",
)


class TestBsr:
    def test_recovers_sentence_despite_wrong_top1(self):
        result = bsr(WALKTHROUGH_SETS, WALKTHROUGH_INDEX, scorer="ac", beam_width=10)
        assert result.ranked_sentences[0][0] == "s00"
        beam_keywords = [q.keywords for q in result.best_queries.queries()]
        assert ("during", "time", "work") in beam_keywords

    def test_greedy_misses_on_same_instance(self):
        result = greedy_retrieve(WALKTHROUGH_SETS, WALKTHROUGH_INDEX, scorer="ac")
        assert result.ranked_sentences[0][0] != "s00"

    def test_metadata(self):
        result = bsr(WALKTHROUGH_SETS, WALKTHROUGH_INDEX, beam_width=4, k_used=2)
        assert result.metadata["num_sets"] == 3
        assert result.metadata["beam_width"] == 4
        assert result.metadata["k_used"] == 2
        assert result.metadata["scorer"] == "ac"

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            bsr(KeywordSequence(sets=()), WALKTHROUGH_INDEX)

    def test_empty_corpus_gives_empty_result(self):
        empty = make_index([])
        result = bsr(WALKTHROUGH_SETS, empty)
        assert result.ranked_sentences == ()
        assert result.best_queries.entries == ()

    def test_ranking_reaches_five_when_possible(self):
        result = bsr(WALKTHROUGH_SETS, WALKTHROUGH_INDEX, top_n=5)
        assert len(result.ranked_sentences) == 5
        ids = [sid for sid, _ in result.ranked_sentences]
        assert len(set(ids)) == 5

    def test_deterministic(self):
        a = bsr(WALKTHROUGH_SETS, WALKTHROUGH_INDEX, scorer="ac", beam_width=3)
        b = bsr(WALKTHROUGH_SETS, WALKTHROUGH_INDEX, scorer="ac", beam_width=3)
        assert result_to_record(a) == result_to_record(b)

    def test_all_scorers_run(self):
        for scorer in ("ac", "ld", "tfidf"):
            result = bsr(WALKTHROUGH_SETS, WALKTHROUGH_INDEX, scorer=scorer)
            assert len(result.ranked_sentences) == 5
            assert result.metadata["scorer"] in ("ac", "ld", "tfidf")


def brute_force_best(sequence, index, k_used=None, m_score=5):
    """Exhaustively score every combination query (the oracle for bsr)."""
    candidate_lists = []
    for keyword_set in sequence.sets:
        cands = keyword_set.candidates[:k_used] if k_used else keyword_set.candidates
        candidate_lists.append([w for w, _ in cands])
    best = None
    for combo in itertools.product(*candidate_lists):
        query = CombinationQuery(tuple(combo))
        value = ac_score(query, index, m_score=m_score).value
        key = (-value, query.keywords)
        if best is None or key < best[0]:
            best = (key, query, value)
    return best[1], best[2]


def random_instance(rng, n_sentences=20, vocab=14, max_l=4, max_k=4):
    lemmas = [f"w{i:02d}" for i in range(vocab)]
    rows = [
        tuple(rng.choice(lemmas, size=rng.integers(2, 6), replace=True))
        for _ in range(n_sentences)
    ]
    index = make_index(rows)
    length = int(rng.integers(1, max_l + 1))
    sets = []
    for pos in range(length):
        k = int(rng.integers(1, max_k + 1))
        words = rng.choice(lemmas, size=k, replace=False)
        sets.append(ks(list(words), position=pos))
    return index, KeywordSequence(sets=tuple(sets), sentence_id=None)


class TestBeamProperties:
    def test_exhaustive_equivalence_when_beam_covers_all(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            index, seq = random_instance(rng)
            widths = [ks_.k for ks_ in seq.sets]
            m = int(np.prod(widths))
            result = bsr(seq, index, scorer="ac", beam_width=m)
            best_query, best_value = brute_force_best(seq, index)
            got_query, got_score = result.best_queries.entries[0]
            assert got_query.keywords == best_query.keywords
            assert got_score.value == pytest.approx(best_value, abs=1e-12)

    def test_greedy_equals_beam_with_k_used_1(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            index, seq = random_instance(rng)
            greedy = greedy_retrieve(seq, index, scorer="ac")
            beam = bsr(seq, index, scorer="ac", beam_width=1, k_used=1)
            assert greedy.ranked_sentences == beam.ranked_sentences
            assert (
                greedy.best_queries.entries[0][0].keywords
                == beam.best_queries.entries[0][0].keywords
            )

    def test_best_score_non_decreasing_in_beam_width(self):
        rng = np.random.default_rng(19)
        for _ in range(15):
            index, seq = random_instance(rng)
            values = []
            for m in (1, 2, 4, 8, 16, 64):
                result = bsr(seq, index, scorer="ac", beam_width=m)
                values.append(result.best_queries.entries[0][1].value)
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_recall_not_hurt_by_wider_candidate_lists(self):
        # statistical trend: using all k candidates beats truncating to 1
        index = synthetic_index(120, vocab_size=80, length_range=(5, 9), seed=21)
        profile = ClassifierProfile(
            topk_accuracy={1: 0.25, 5: 0.75}, vocabulary_size=len(index.vocabulary), k=5
        )
        dist = derive_rank_distribution(profile)
        sequences = simulate_corpus(index, dist, seed=33)
        scorer = make_scorer("ac", index)
        hits = {1: 0, 5: 0}
        for k_used in (1, 5):
            for seq in sequences:
                result = bsr(seq, index, scorer=scorer, beam_width=10, k_used=k_used)
                top = [sid for sid, _ in result.ranked_sentences[:5]]
                hits[k_used] += seq.sentence_id in top
        recall1 = hits[1] / len(sequences)
        recall5 = hits[5] / len(sequences)
        assert recall5 >= recall1 - 0.02


class TestFileFormats:
    def test_keyword_sequence_record_round_trip(self):
        record = keyword_sequence_to_record(WALKTHROUGH_SETS)
        assert record["sentence_id"] == "s00"
        assert record["keyword_sets"][0][0] == {"word": "may", "p": 0.5}
        back = keyword_sequence_from_record(record)
        assert back == WALKTHROUGH_SETS

    def test_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "sets.jsonl"
        write_keyword_sequences([WALKTHROUGH_SETS], path)
        back = read_keyword_sequences(path)
        assert back == [WALKTHROUGH_SETS]

    def test_malformed_record_rejected(self):
        with pytest.raises(DataError):
            keyword_sequence_from_record({"keyword_sets": [[{"word": "a"}]]})

    def test_malformed_jsonl_line(self, tmp_path):
        path = tmp_path / "sets.jsonl"
        path.write_text("{broken\n")
        with pytest.raises(DataError, match=":1"):
            read_keyword_sequences(path)

    def test_results_round_trip(self, tmp_path):
        result = bsr(WALKTHROUGH_SETS, WALKTHROUGH_INDEX)
        path = tmp_path / "res.jsonl"
        write_results([result], path)
        records = read_result_records(path)
        assert records == [json.loads(json.dumps(result_to_record(result)))]
        assert records[0]["metadata"]["sentence_id"] == "s00"
        assert records[0]["beam"][0]["keywords"]
