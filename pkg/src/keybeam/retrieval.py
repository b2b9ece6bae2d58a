"""Beam search retrieval over sequences of keyword sets.

A word-level classifier emits, for each word slot of an unknown sentence,
a keyword set: its top-k candidate lemmas with confidences. Retrieval
walks those sets left to right, maintaining a beam of combination queries
(one candidate per consumed set), scoring each candidate query against the
corpus and keeping the best ``m``. After the last set, the beam's queries
rank sentences; the final result list is assembled best query first.

The greedy baseline skips the search entirely and uses only each set's
top-1 candidate, which collapses as soon as top-1 accuracy is poor.

File formats owned by this module (JSON Lines, UTF-8):

* keyword sets, one sentence per line::

    {"sentence_id": str, "keyword_sets": [[{"word": str, "p": float}, ...k], ...L]}

* retrieval results, one record per retrieval, with the ranked sentence
  ids/scores and the final beam.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import CorpusIndex
from .errors import DataError
from .scoring import (
    EMPTY_QUERY,
    CombinationQuery,
    QueryScore,
    _ScorerBase,
    make_scorer,
)


@dataclass(frozen=True)
class KeywordSet:
    """Ranked candidate lemmas for one word slot.

    Candidates are (lemma, probability) sorted by descending probability,
    distinct lemmas, probabilities in (0, 1].
    """

    candidates: tuple[tuple[str, float], ...]
    position: int = 0

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("a keyword set needs at least one candidate")
        probs = [p for _, p in self.candidates]
        if any(not (0.0 < p <= 1.0) for p in probs):
            raise ValueError("candidate probabilities must lie in (0, 1]")
        if any(a < b for a, b in zip(probs, probs[1:])):
            raise ValueError("candidates must be sorted by descending probability")
        lemmas = [w for w, _ in self.candidates]
        if len(set(lemmas)) != len(lemmas):
            raise ValueError("candidate lemmas must be distinct within a set")

    @property
    def k(self) -> int:
        return len(self.candidates)

    def top(self) -> str:
        return self.candidates[0][0]


@dataclass(frozen=True)
class KeywordSequence:
    """The keyword sets of one sentence, in reading order."""

    sets: tuple[KeywordSet, ...]
    sentence_id: str | None = None

    def __len__(self) -> int:
        return len(self.sets)


@dataclass(frozen=True)
class Beam:
    """Retained (query, score) pairs, best first, at most ``width`` entries."""

    entries: tuple[tuple[CombinationQuery, QueryScore], ...]
    width: int

    def queries(self) -> tuple[CombinationQuery, ...]:
        return tuple(q for q, _ in self.entries)


@dataclass(frozen=True)
class RetrievalResult:
    """Outcome of one retrieval task."""

    ranked_sentences: tuple[tuple[str, float], ...]
    best_queries: Beam
    metadata: dict = field(default_factory=dict)


def expand(
    beam_queries: Sequence[CombinationQuery],
    keyword_set: KeywordSet,
    k_used: int | None = None,
) -> list[CombinationQuery]:
    """Extend every retained query by every candidate of the keyword set.

    ``k_used`` truncates the candidate list (None uses all k). The output
    has len(beam_queries) * k entries, parents grouped together, and each
    new keyword carries its (set position, candidate rank) provenance.
    """
    candidates = keyword_set.candidates
    if k_used is not None:
        if k_used < 1:
            raise ValueError(f"k_used must be >= 1, got {k_used}")
        candidates = candidates[:k_used]
    return [
        query.extended(lemma, keyword_set.position, rank)
        for query in beam_queries
        for rank, (lemma, _) in enumerate(candidates)
    ]


def _resolve_scorer(scorer, corpus, m_score, count_mode) -> _ScorerBase:
    if isinstance(scorer, str):
        return make_scorer(scorer, corpus, m_score=m_score, count_mode=count_mode)
    return scorer


def prune(
    candidates: Sequence[CombinationQuery],
    corpus: CorpusIndex,
    scorer="ac",
    width: int = 10,
    m_score: int = 5,
    count_mode: str = "multiplicity",
) -> Beam:
    """Keep the ``width`` best-scoring candidate queries.

    Ties break lexicographically on the keyword list so pruning is
    deterministic; fewer than ``width`` candidates are all kept. (Beam
    search proper scores whole expansions in one batch; this is the
    stand-alone operation.)
    """
    if width < 1:
        raise ValueError(f"beam width must be >= 1, got {width}")
    engine = _resolve_scorer(scorer, corpus, m_score, count_mode)
    scores = [engine.score_query(q) for q in candidates]
    order = sorted(
        range(len(candidates)),
        key=lambda i: (-scores[i].value, candidates[i].keywords),
    )
    kept = order[:width]
    return Beam(entries=tuple((candidates[i], scores[i]) for i in kept), width=width)


def _assemble_ranking(
    beam: Beam, scorer: _ScorerBase, corpus: CorpusIndex, top_n: int
) -> tuple[tuple[str, float], ...]:
    """Best query's ranking first, then lower beam queries' top sentences
    (deduplicated), padded with untouched sentences in id order until the
    list has min(top_n, corpus size) entries."""
    want = min(top_n, len(corpus))
    ranked: list[tuple[str, float]] = []
    seen: set[str] = set()
    for query, _ in beam.entries:
        if len(ranked) >= want:
            break
        for sid, score in scorer.rank_query(query, limit=want):
            if sid not in seen:
                seen.add(sid)
                ranked.append((sid, score))
                if len(ranked) >= want:
                    break
    if len(ranked) < want:
        for sid in corpus.sorted_ids():
            if sid not in seen:
                seen.add(sid)
                ranked.append((sid, 0.0))
                if len(ranked) >= want:
                    break
    return tuple(ranked)


def bsr(
    sequence: KeywordSequence,
    corpus: CorpusIndex,
    scorer="ac",
    beam_width: int = 10,
    k_used: int | None = None,
    top_n: int = 5,
    m_score: int = 5,
    count_mode: str = "multiplicity",
) -> RetrievalResult:
    """Beam search retrieval over the sentence's keyword sets.

    Iterates expand -> score -> prune across all L sets, then ranks
    sentences with the final beam. ``scorer`` is a method name ("ac",
    "ld", "tfidf") or a prebuilt scorer bound to the same corpus.
    Deterministic: identical inputs and parameters give identical results.
    """
    if len(sequence) == 0:
        raise ValueError("keyword sequence is empty; nothing to retrieve")
    if beam_width < 1:
        raise ValueError(f"beam width must be >= 1, got {beam_width}")
    engine = _resolve_scorer(scorer, corpus, m_score, count_mode)
    metadata = {
        "sentence_id": sequence.sentence_id,
        "num_sets": len(sequence),
        "k": max(ks.k for ks in sequence.sets),
        "k_used": k_used,
        "beam_width": beam_width,
        "m_score": engine.m_score,
        "scorer": engine.method,
        "strategy": "bsr",
    }
    if len(corpus) == 0:
        return RetrievalResult(
            ranked_sentences=(),
            best_queries=Beam(entries=(), width=beam_width),
            metadata=metadata,
        )

    engine.reset()
    beam_queries: list[CombinationQuery] = [EMPTY_QUERY]
    first = True
    for keyword_set in sequence.sets:
        candidates = expand(beam_queries, keyword_set, k_used=k_used)
        per_parent = len(candidates) // len(beam_queries)
        if first:
            parent_ids = [-1] * len(candidates)
        else:
            parent_ids = [p for p in range(len(beam_queries)) for _ in range(per_parent)]
        values = engine.candidate_values(candidates, parent_ids)
        order = sorted(
            range(len(candidates)),
            key=lambda i: (-values[i], candidates[i].keywords),
        )
        kept = order[:beam_width]
        engine.select(kept)
        beam_queries = [candidates[i] for i in kept]
        first = False

    beam = Beam(
        entries=tuple(zip(beam_queries, engine.beam_details())), width=beam_width
    )
    ranking = _assemble_ranking(beam, engine, corpus, top_n)
    engine.reset()
    return RetrievalResult(
        ranked_sentences=ranking, best_queries=beam, metadata=metadata
    )


def greedy_retrieve(
    sequence: KeywordSequence,
    corpus: CorpusIndex,
    scorer="ac",
    top_n: int = 5,
    m_score: int = 5,
    count_mode: str = "multiplicity",
) -> RetrievalResult:
    """Rank sentences with the single query of all top-1 candidates."""
    if len(sequence) == 0:
        raise ValueError("keyword sequence is empty; nothing to retrieve")
    engine = _resolve_scorer(scorer, corpus, m_score, count_mode)
    query = EMPTY_QUERY
    for keyword_set in sequence.sets:
        query = query.extended(keyword_set.top(), keyword_set.position, 0)
    metadata = {
        "sentence_id": sequence.sentence_id,
        "num_sets": len(sequence),
        "k": max(ks.k for ks in sequence.sets),
        "k_used": 1,
        "beam_width": 1,
        "m_score": engine.m_score,
        "scorer": engine.method,
        "strategy": "greedy",
    }
    if len(corpus) == 0:
        return RetrievalResult(
            ranked_sentences=(),
            best_queries=Beam(entries=(), width=1),
            metadata=metadata,
        )
    score = engine.score_query(query)
    beam = Beam(entries=((query, score),), width=1)
    ranking = _assemble_ranking(beam, engine, corpus, top_n)
    return RetrievalResult(
        ranked_sentences=ranking, best_queries=beam, metadata=metadata
    )


# ---------------------------------------------------------------------------
# JSONL interfaces


def keyword_sequence_to_record(sequence: KeywordSequence) -> dict:
    return {
        "sentence_id": sequence.sentence_id,
        "keyword_sets": [
            [{"word": w, "p": p} for w, p in ks.candidates] for ks in sequence.sets
        ],
    }


def keyword_sequence_from_record(record: dict) -> KeywordSequence:
    try:
        sets = tuple(
            KeywordSet(
                candidates=tuple((c["word"], float(c["p"])) for c in raw_set),
                position=pos,
            )
            for pos, raw_set in enumerate(record["keyword_sets"])
        )
        return KeywordSequence(sets=sets, sentence_id=record.get("sentence_id"))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed keyword-set record: {exc}")


def write_keyword_sequences(
    sequences: Sequence[KeywordSequence], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            fh.write(json.dumps(keyword_sequence_to_record(seq), sort_keys=True))
            fh.write("\n")


def read_keyword_sequences(path: str | Path) -> list[KeywordSequence]:
    sequences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}")
            sequences.append(keyword_sequence_from_record(record))
    return sequences


def result_to_record(result: RetrievalResult) -> dict:
    return {
        "metadata": result.metadata,
        "ranked": [[sid, score] for sid, score in result.ranked_sentences],
        "beam": [
            {"keywords": list(q.keywords), "value": s.value}
            for q, s in result.best_queries.entries
        ],
    }


def write_results(results: Sequence[RetrievalResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(result_to_record(result), sort_keys=True))
            fh.write("\n")


def read_result_records(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}")
    return records
