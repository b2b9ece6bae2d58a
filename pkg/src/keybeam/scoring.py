"""Query-to-corpus scoring.

Three scoring methods rank corpus sentences against a combination query
(one keyword per consumed keyword set):

* occurrence counting ("ac"): per-sentence keyword occurrence counts found
  with the Aho-Corasick automaton, aggregated as the mean of the top
  ``m_score`` per-sentence counts, so a few wrong keywords in the query are
  tolerated;
* token-level Levenshtein distance ("ld"): edit distance between the query
  keyword sequence and each sentence's lemma sequence (lower is better);
* TF-IDF cosine ("tfidf"): cosine similarity of TF-IDF-weighted bags, both
  query and sentence weighted.

``ac_score``, ``levenshtein_score``, ``tfidf_score`` and ``rank_sentences``
are the reference implementations, written for clarity and used as the
contract surface. The ``*Scorer`` classes below are batch engines backed by
sparse matrices and vectorized dynamic programming; they are exactly
equivalent (tested) and exist because beam search scores hundreds of
sibling candidate queries per iteration.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from math import log, sqrt

import numpy as np
from scipy import sparse

from .corpus import CorpusIndex, ProcessedSentence
from .matcher import build_automaton, count_occurrences

COUNT_MODES = ("multiplicity", "distinct")


@dataclass(frozen=True)
class CombinationQuery:
    """A keyword per consumed keyword set, in set order.

    ``provenance`` records, per keyword, the (keyword-set position,
    candidate rank) it was drawn from; it is bookkeeping only and never
    affects scoring. Keywords may repeat across positions.
    """

    keywords: tuple[str, ...]
    provenance: tuple[tuple[int, int], ...] = ()

    def extended(self, keyword: str, set_position: int, rank: int) -> "CombinationQuery":
        return CombinationQuery(
            keywords=self.keywords + (keyword,),
            provenance=self.provenance + ((set_position, rank),),
        )

    def __len__(self) -> int:
        return len(self.keywords)


EMPTY_QUERY = CombinationQuery(keywords=(), provenance=())


@dataclass(frozen=True)
class QueryScore:
    """Aggregate relevance of one query to the corpus.

    ``value`` is the scorer's aggregate (higher is better for every
    method; the Levenshtein scorer stores the negated mean distance).
    ``per_sentence`` lists the ``m_score`` best sentences as
    (sentence id, per-sentence score) in best-first order with ties broken
    by ascending sentence id; only sentences with a meaningful score
    appear (for Levenshtein every sentence has one).
    """

    value: float
    per_sentence: tuple[tuple[str, float], ...] = ()


def _top_counts_value(counts_sum: float, m_score: int, corpus_size: int) -> float:
    if corpus_size == 0:
        return 0.0
    return counts_sum / min(m_score, corpus_size)


def ac_score(
    query: CombinationQuery,
    corpus: CorpusIndex,
    m_score: int = 5,
    count_mode: str = "multiplicity",
) -> QueryScore:
    """Occurrence-count relevance of ``query`` to the corpus.

    Per-sentence count is the total number of occurrences of the query's
    keywords in the sentence ("multiplicity") or the number of distinct
    query keywords present ("distinct"); occurrences are whole-token
    matches found with the Aho-Corasick automaton. The value is the mean
    of the ``m_score`` highest per-sentence counts (sentences without any
    query keyword count as zero). Only sentences sharing at least one
    keyword with the query, located through the inverted index, are
    scanned.
    """
    if not query.keywords:
        raise ValueError("cannot score an empty query")
    if m_score < 1:
        raise ValueError(f"m_score must be >= 1, got {m_score}")
    if count_mode not in COUNT_MODES:
        raise ValueError(f"count_mode must be one of {COUNT_MODES}, got {count_mode!r}")
    if len(corpus) == 0:
        return QueryScore(value=0.0, per_sentence=())

    automaton = build_automaton(list(query.keywords))
    distinct = set(query.keywords)
    candidate_ids = sorted({sid for kw in distinct for sid in corpus.ids_for(kw)})

    scored: list[tuple[str, int]] = []
    for sid in candidate_ids:
        occ = count_occurrences(automaton, corpus.sentence(sid))
        if count_mode == "multiplicity":
            count = sum(occ)
        else:
            count = len({automaton.patterns[pid] for pid, c in enumerate(occ) if c})
        if count:
            scored.append((sid, count))

    scored.sort(key=lambda item: (-item[1], item[0]))
    top = scored[:m_score]
    value = _top_counts_value(float(sum(c for _, c in top)), m_score, len(corpus))
    return QueryScore(
        value=value, per_sentence=tuple((sid, float(c)) for sid, c in top)
    )


def token_edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Levenshtein distance between two token sequences (unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i]
        for j, tok_b in enumerate(b, start=1):
            cur.append(
                min(
                    prev[j - 1] + (tok_a != tok_b),
                    prev[j] + 1,
                    cur[j - 1] + 1,
                )
            )
        prev = cur
    return prev[-1]


def levenshtein_score(query: CombinationQuery, sentence: ProcessedSentence) -> int:
    """Token-level edit distance between query keywords and sentence lemmas."""
    return token_edit_distance(query.keywords, sentence.lemmas)


@dataclass(frozen=True)
class TfidfModel:
    """IDF weights and per-sentence TF-IDF bag vectors for one corpus.

    idf(l) = ln(N / df(l)) computed from the indexed corpus only; lemmas
    absent from the corpus get weight zero (they cannot match anything).
    """

    idf: dict[str, float]
    sentence_vectors: dict[str, dict[str, float]]
    sentence_norms: dict[str, float] = field(repr=False)

    def query_vector(self, keywords: Sequence[str]) -> dict[str, float]:
        vec = {}
        for lemma, count in Counter(keywords).items():
            w = self.idf.get(lemma, 0.0)
            if w > 0.0:
                vec[lemma] = count * w
        return vec


def build_tfidf_model(corpus: CorpusIndex) -> TfidfModel:
    n = len(corpus)
    idf = {lemma: log(n / len(ids)) for lemma, ids in corpus.inverted.items()}
    vectors: dict[str, dict[str, float]] = {}
    norms: dict[str, float] = {}
    for s in corpus.sentences:
        vec = {
            lemma: count * idf[lemma]
            for lemma, count in Counter(s.lemmas).items()
            if idf[lemma] > 0.0
        }
        vectors[s.id] = vec
        norms[s.id] = sqrt(sum(w * w for w in vec.values()))
    return TfidfModel(idf=idf, sentence_vectors=vectors, sentence_norms=norms)


def tfidf_score(
    query: CombinationQuery, sentence: ProcessedSentence, model: TfidfModel
) -> float:
    """Cosine similarity of TF-IDF-weighted bags; 0 on disjoint support."""
    qvec = model.query_vector(query.keywords)
    svec = model.sentence_vectors[sentence.id]
    qnorm = sqrt(sum(w * w for w in qvec.values()))
    snorm = model.sentence_norms[sentence.id]
    if qnorm == 0.0 or snorm == 0.0:
        return 0.0
    dot = sum(w * svec[lemma] for lemma, w in qvec.items() if lemma in svec)
    return dot / (qnorm * snorm)


def rank_sentences(
    query: CombinationQuery,
    corpus: CorpusIndex,
    method: str = "ac",
    count_mode: str = "multiplicity",
    model: TfidfModel | None = None,
) -> list[tuple[str, float]]:
    """Rank every corpus sentence against the query.

    Returns (sentence id, score) pairs over the whole corpus, best first:
    descending count for "ac", ascending distance for "levenshtein"/"ld",
    descending cosine for "tfidf". Ties always break by ascending
    sentence id, so rankings are deterministic.
    """
    if method in ("ac",):
        score_of = _ac_sentence_counts(query, corpus, count_mode)
        reverse = True
    elif method in ("levenshtein", "ld"):
        score_of = {
            s.id: float(levenshtein_score(query, s)) for s in corpus.sentences
        }
        reverse = False
    elif method == "tfidf":
        model = model if model is not None else build_tfidf_model(corpus)
        score_of = {
            s.id: tfidf_score(query, s, model) for s in corpus.sentences
        }
        reverse = True
    else:
        raise ValueError(f"unknown scoring method {method!r}")

    sign = -1.0 if reverse else 1.0
    return sorted(
        score_of.items(), key=lambda item: (sign * item[1], item[0])
    )


def _ac_sentence_counts(
    query: CombinationQuery, corpus: CorpusIndex, count_mode: str
) -> dict[str, float]:
    if count_mode not in COUNT_MODES:
        raise ValueError(f"count_mode must be one of {COUNT_MODES}, got {count_mode!r}")
    counts = {s.id: 0.0 for s in corpus.sentences}
    if not query.keywords:
        return counts
    automaton = build_automaton(list(query.keywords))
    candidate_ids = {sid for kw in set(query.keywords) for sid in corpus.ids_for(kw)}
    for sid in candidate_ids:
        occ = count_occurrences(automaton, corpus.sentence(sid))
        if count_mode == "multiplicity":
            counts[sid] = float(sum(occ))
        else:
            counts[sid] = float(
                len({automaton.patterns[pid] for pid, c in enumerate(occ) if c})
            )
    return counts


# ---------------------------------------------------------------------------
# batch scorers
#
# One scorer instance is bound to a corpus and reused across retrievals.
# Beam search calls candidate_values() once per iteration with every
# candidate query of that iteration; only the pruned survivors get full
# QueryScore objects (beam_details). Scorers may keep per-candidate state
# between candidate_values() and select() — the Levenshtein scorer extends
# dynamic-programming rows instead of recomputing tables, the others cache
# the per-candidate sentence scores of the pending expansion.


def _topk_sums(
    data: np.ndarray, indptr: np.ndarray, n_rows: int, k: int
) -> np.ndarray:
    """Per-row sum of the k largest entries of a CSR-like ragged array.

    One global stable sort (grouped by row, descending value) replaces a
    per-row partition; rows are the candidate queries, entries their
    nonzero per-sentence scores.
    """
    nnz = data.shape[0]
    if nnz == 0:
        return np.zeros(n_rows)
    per_row = np.diff(indptr)
    row_ids = np.repeat(np.arange(n_rows), per_row)
    order = np.lexsort((-data, row_ids))
    rank_in_row = np.arange(nnz) - np.repeat(indptr[:-1], per_row)
    mask = rank_in_row < k
    return np.bincount(row_ids[mask], weights=data[order][mask], minlength=n_rows)


def _topk_sums_int(
    data: np.ndarray, indptr: np.ndarray, n_rows: int, k: int
) -> np.ndarray:
    """:func:`_topk_sums` for small non-negative integer entries.

    Occurrence counts are tiny integers, so per-row count histograms give
    the top-k sum in O(nnz) without any sort: with tail_n[c] / tail_sum[c]
    the number / total of entries >= c, the cutoff c* is the largest c
    with tail_n[c] >= k and the answer is tail_sum[c*+1] plus enough
    entries of value c* to reach k.
    """
    nnz = data.shape[0]
    if nnz == 0:
        return np.zeros(n_rows)
    counts = data.astype(np.int64)
    kmax = int(counts.max())
    if kmax > 4096:  # degenerate corpus; the sort path is safer than a huge histogram
        return _topk_sums(data, indptr, n_rows, k)
    width = kmax + 1
    per_row = np.diff(indptr)
    row_ids = np.repeat(np.arange(n_rows), per_row)
    hist = np.bincount(
        row_ids * width + counts, minlength=n_rows * width
    ).reshape(n_rows, width)
    tail_n = hist[:, ::-1].cumsum(axis=1)[:, ::-1]
    tail_sum = (hist * np.arange(width, dtype=np.int64))[:, ::-1].cumsum(axis=1)[:, ::-1]
    cutoff = (tail_n >= k).sum(axis=1) - 1  # -1: fewer than k entries in the row
    rows = np.arange(n_rows)
    above = np.minimum(cutoff + 1, width - 1)
    above_n = np.where(cutoff + 1 < width, tail_n[rows, above], 0)
    above_sum = np.where(cutoff + 1 < width, tail_sum[rows, above], 0)
    top = above_sum + (k - above_n) * np.maximum(cutoff, 0)
    return np.where(cutoff < 0, tail_sum[:, 0], top).astype(np.float64)


def _top_rows_of_segment(
    data: np.ndarray, rows: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """The k best (value, row) pairs of one candidate's score segment.

    Ordered by descending value with ties broken by ascending row, so the
    cut at k is deterministic and matches the reference scorers.
    """
    order = np.lexsort((rows, -data))[:k]
    return data[order], rows[order]


class _ScorerBase:
    method = "?"

    def __init__(self, corpus: CorpusIndex, m_score: int = 5):
        if m_score < 1:
            raise ValueError(f"m_score must be >= 1, got {m_score}")
        self.corpus = corpus
        self.m_score = m_score
        self._ids = np.array(corpus.sorted_ids(), dtype=object)

    # -- beam protocol ------------------------------------------------

    def reset(self) -> None:
        """Start a new retrieval (drop any per-beam state)."""

    def candidate_values(
        self, candidates: Sequence[CombinationQuery], parent_ids: Sequence[int]
    ) -> np.ndarray:
        """Aggregate relevance of each candidate (higher is better).

        ``candidates[i]`` extends the current beam's entry
        ``parent_ids[i]`` by one keyword (-1 means the empty query).
        """
        raise NotImplementedError

    def select(self, kept: Sequence[int]) -> None:
        """The beam was pruned to these candidate positions, in order."""
        raise NotImplementedError

    def beam_details(self) -> list[QueryScore]:
        """Full QueryScore objects for the current beam, in beam order."""
        raise NotImplementedError

    # -- stand-alone scoring -------------------------------------------

    def score_query(self, query: CombinationQuery) -> QueryScore:
        """Score one query outside any beam search."""
        self.reset()
        self.candidate_values([query], [-1])
        self.select([0])
        detail = self.beam_details()[0]
        self.reset()
        return detail

    def rank_query(
        self, query: CombinationQuery, limit: int | None = None
    ) -> list[tuple[str, float]]:
        """Sentences in best-first order under this scorer (ties by id)."""
        raise NotImplementedError


def _lemma_id_map(corpus: CorpusIndex) -> dict[str, int]:
    return {lemma: i for i, lemma in enumerate(sorted(corpus.inverted))}


class _SegmentCache:
    """Per-candidate (values, sentence rows) segments of one expansion."""

    def __init__(self, data, indices, indptr):
        self.data = data
        self.indices = indices
        self.indptr = indptr

    def segment(self, row: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[row], self.indptr[row + 1]
        return self.data[lo:hi], self.indices[lo:hi]


class AhoCorasickScorer(_ScorerBase):
    """Occurrence-count scorer backed by a sparse sentence/lemma matrix.

    Row s of the matrix holds, per corpus lemma, its whole-token
    occurrence count in sentence s — exactly what the automaton computes
    pattern by pattern (equivalence is property-tested). Scoring a batch
    of candidate queries is then one sparse matrix product followed by a
    global top-m reduction.
    """

    method = "ac"

    def __init__(
        self,
        corpus: CorpusIndex,
        m_score: int = 5,
        count_mode: str = "multiplicity",
    ):
        super().__init__(corpus, m_score)
        if count_mode not in COUNT_MODES:
            raise ValueError(
                f"count_mode must be one of {COUNT_MODES}, got {count_mode!r}"
            )
        self.count_mode = count_mode
        self._lemma_ids = _lemma_id_map(corpus)
        rows, cols, data = [], [], []
        for row, s in enumerate(corpus.sentences):
            for lemma, count in Counter(s.lemmas).items():
                rows.append(row)
                cols.append(self._lemma_ids[lemma])
                data.append(count)
        occ = sparse.csc_matrix(
            (np.asarray(data, dtype=np.float64), (rows, cols)),
            shape=(len(corpus), len(self._lemma_ids)),
        )
        if count_mode == "distinct":
            occ = occ.sign()
        self._occ = occ                      # sentences x lemmas, CSC
        self._occ_t = occ.T.tocsr()          # lemmas x sentences, CSR (shared data)
        self._cache: _SegmentCache | None = None
        self._beam: list[int] = []

    def _query_columns(self, query: CombinationQuery) -> tuple[list[int], list[float]]:
        bag: dict[str, float] = {}
        if self.count_mode == "multiplicity":
            for kw in query.keywords:
                bag[kw] = bag.get(kw, 0.0) + 1.0
        else:
            for kw in query.keywords:
                bag[kw] = 1.0
        cols, weights = [], []
        for kw, mult in bag.items():
            lid = self._lemma_ids.get(kw)
            if lid is not None:
                cols.append(lid)
                weights.append(mult)
        return cols, weights

    def reset(self) -> None:
        self._cache = None
        self._beam = []

    def candidate_values(self, candidates, parent_ids):
        n_sent = len(self.corpus)
        if n_sent == 0:
            self._cache = _SegmentCache(
                np.zeros(0), np.zeros(0, dtype=np.int32),
                np.zeros(len(candidates) + 1, dtype=np.int32),
            )
            return np.zeros(len(candidates))
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for query in candidates:
            cols, weights = self._query_columns(query)
            indices.extend(cols)
            data.extend(weights)
            indptr.append(len(indices))
        sel = sparse.csr_matrix(
            (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr)),
            shape=(len(candidates), self._occ.shape[1]),
        )
        counts = sel @ self._occ_t  # candidates x sentences, CSR
        self._cache = _SegmentCache(counts.data, counts.indices, counts.indptr)
        sums = _topk_sums_int(counts.data, counts.indptr, len(candidates), self.m_score)
        return sums / min(self.m_score, n_sent)

    def select(self, kept) -> None:
        self._beam = list(kept)

    def beam_details(self) -> list[QueryScore]:
        details = []
        n_sent = len(self.corpus)
        for row in self._beam:
            vals, rows = self._cache.segment(row)
            vals_top, rows_top = _top_rows_of_segment(vals, rows, self.m_score)
            details.append(
                QueryScore(
                    value=_top_counts_value(float(vals_top.sum()), self.m_score, n_sent),
                    per_sentence=tuple(
                        (sid, float(v)) for sid, v in zip(self._ids[rows_top], vals_top)
                    ),
                )
            )
        return details

    def rank_query(self, query, limit=None):
        cols, weights = self._query_columns(query)
        if not cols or len(self.corpus) == 0:
            return []
        counts = self._occ[:, cols] @ np.asarray(weights)
        nz = np.nonzero(counts)[0]
        # sentences are stored in id order, so a stable sort on the score
        # alone breaks ties by ascending sentence id
        order = nz[np.argsort(-counts[nz], kind="stable")]
        if limit is not None:
            order = order[:limit]
        return [(self._ids[r], float(counts[r])) for r in order]


class LevenshteinScorer(_ScorerBase):
    """Token-level edit-distance scorer with incremental beam state.

    The query grows by one keyword per beam iteration, which extends the
    edit-distance dynamic program by exactly one row; the scorer keeps the
    last DP row of every retained query (against all sentences at once)
    and never recomputes a full table. A query's aggregate value is the
    negated mean of its ``m_score`` smallest sentence distances, so that
    "higher is better" holds for every scorer; per-sentence scores remain
    plain distances (lower is better).
    """

    method = "ld"

    def __init__(self, corpus: CorpusIndex, m_score: int = 5):
        super().__init__(corpus, m_score)
        lengths = np.array([len(s.lemmas) for s in corpus.sentences], dtype=np.intp)
        smax = int(lengths.max()) if lengths.size else 0
        # token grid is (sentence position, sentence): DP state lives in
        # (candidate, position, sentence) layout so the inner sweeps run
        # over the contiguous sentence axis
        grid = np.full((smax, len(corpus)), -1, dtype=np.int32)
        self._token_ids = _lemma_id_map(corpus)
        for row, s in enumerate(corpus.sentences):
            for j, lemma in enumerate(s.lemmas):
                grid[j, row] = self._token_ids[lemma]
        self._grid = grid
        self._lengths = lengths
        self._smax = smax
        # distances are bounded by query length + sentence length, so int16 is
        # plenty and halves the memory traffic of the DP sweep
        self._base_row = np.repeat(
            np.arange(smax + 1, dtype=np.int16)[:, None], max(len(corpus), 1), axis=1
        )
        self._stack_buffer: np.ndarray | None = None
        self._rows: np.ndarray | None = None      # (beam, smax+1, n_sent)
        self._pending: np.ndarray | None = None
        self._pending_dists: np.ndarray | None = None
        self._beam_dists: np.ndarray | None = None

    def _token_id(self, lemma: str) -> int:
        tid = self._token_ids.get(lemma)
        if tid is None:
            tid = len(self._token_ids)
            self._token_ids[lemma] = tid
        return tid

    def reset(self) -> None:
        self._rows = None
        self._pending = None
        self._pending_dists = None
        self._beam_dists = None

    def _extend_rows(self, prev: np.ndarray, lemma_ids: np.ndarray) -> np.ndarray:
        """One DP row per candidate: prev is (C, S+1, Ns), returns same shape.

        dist[j] = min(prev[j-1] + sub, prev[j] + 1, dist[j-1] + 1); the
        in-row dependency is an unrolled running minimum over the short
        sentence-position axis, each step a whole (C, Ns) slice.
        """
        sub = self._grid[None, :, :] != lemma_ids[:, None, None]
        seed = np.empty_like(prev)
        seed[:, 0, :] = prev[:, 0, :] + 1
        np.minimum(prev[:, :-1, :] + sub, prev[:, 1:, :] + 1, out=seed[:, 1:, :])
        for j in range(1, seed.shape[1]):
            np.minimum(seed[:, j, :], seed[:, j - 1, :] + 1, out=seed[:, j, :])
        return seed

    def candidate_values(self, candidates, parent_ids):
        n_sent = len(self.corpus)
        if n_sent == 0:
            self._pending_dists = np.zeros((len(candidates), 0), dtype=np.int16)
            return np.zeros(len(candidates))
        n_cand = len(candidates)
        if self._stack_buffer is None or self._stack_buffer.shape[0] < n_cand:
            self._stack_buffer = np.empty(
                (max(n_cand, 64), self._smax + 1, n_sent), dtype=np.int16
            )
        stacked = self._stack_buffer[:n_cand]
        for i, pid in enumerate(parent_ids):
            stacked[i] = self._base_row if pid < 0 else self._rows[pid]
        lemma_ids = np.array(
            [self._token_id(q.keywords[-1]) for q in candidates], dtype=np.int32
        )
        cur = self._extend_rows(stacked, lemma_ids)
        self._pending = cur
        dists = np.take_along_axis(cur, self._lengths[None, None, :], axis=1)[:, 0, :]
        self._pending_dists = dists
        m = min(self.m_score, n_sent)
        if dists.shape[1] > m:
            smallest = np.partition(dists, m - 1, axis=1)[:, :m]
        else:
            smallest = dists
        return -smallest.mean(axis=1)

    def select(self, kept) -> None:
        kept = np.asarray(kept, dtype=np.intp)
        if self._pending is not None:
            self._rows = self._pending[kept]
            self._pending = None
        if self._pending_dists is not None:
            self._beam_dists = self._pending_dists[kept]
            self._pending_dists = None

    def beam_details(self) -> list[QueryScore]:
        return [self._score_from_distances(row) for row in self._beam_dists]

    def _score_from_distances(self, row: np.ndarray) -> QueryScore:
        m = min(self.m_score, row.size)
        # stable sort on distance alone: row order is sentence-id order,
        # so boundary ties resolve by ascending id
        best = np.argsort(row, kind="stable")[:m]
        per = [(self._ids[r], float(row[r])) for r in best]
        value = -float(np.mean([d for _, d in per])) if per else 0.0
        return QueryScore(value=value, per_sentence=tuple(per))

    def score_query(self, query: CombinationQuery) -> QueryScore:
        # candidate_values() only consumes the last keyword (incremental
        # protocol); a stand-alone query needs the whole chain.
        if len(self.corpus) == 0:
            return QueryScore(0.0, ())
        return self._score_from_distances(self._distances_for(query))

    def _distances_for(self, query: CombinationQuery) -> np.ndarray:
        row = self._base_row.copy()
        for kw in query.keywords:
            row = self._extend_rows(
                row[None, :, :], np.array([self._token_id(kw)], dtype=np.int32)
            )[0]
        return np.take_along_axis(row, self._lengths[:, None], axis=1)[:, 0]

    def rank_query(self, query, limit=None):
        if len(self.corpus) == 0:
            return []
        dists = self._distances_for(query)
        order = np.lexsort((self._ids, dists))
        if limit is not None:
            order = order[:limit]
        return [(self._ids[r], float(dists[r])) for r in order]


class TfidfScorer(_ScorerBase):
    """TF-IDF cosine scorer over a sparse weighted bag matrix."""

    method = "tfidf"

    def __init__(self, corpus: CorpusIndex, m_score: int = 5):
        super().__init__(corpus, m_score)
        self.model = build_tfidf_model(corpus)
        self._lemma_ids = _lemma_id_map(corpus)
        rows, cols, data = [], [], []
        for row, s in enumerate(corpus.sentences):
            for lemma, w in self.model.sentence_vectors[s.id].items():
                rows.append(row)
                cols.append(self._lemma_ids[lemma])
                data.append(w)
        mat = sparse.csc_matrix(
            (np.asarray(data), (rows, cols)),
            shape=(len(corpus), len(self._lemma_ids)),
        )
        self._mat = mat
        self._mat_t = mat.T.tocsr()
        norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1))).ravel()
        self._inv_norms = np.divide(
            1.0, norms, out=np.zeros_like(norms), where=norms > 0.0
        )
        self._cache: _SegmentCache | None = None
        self._beam: list[int] = []

    def _query_vec(self, query: CombinationQuery) -> tuple[list[int], list[float]]:
        bag: dict[str, float] = {}
        for kw in query.keywords:
            bag[kw] = bag.get(kw, 0.0) + 1.0
        cols, data = [], []
        for lemma, count in bag.items():
            idf = self.model.idf.get(lemma, 0.0)
            if idf > 0.0:
                cols.append(self._lemma_ids[lemma])
                data.append(count * idf)
        return cols, data

    def reset(self) -> None:
        self._cache = None
        self._beam = []

    def candidate_values(self, candidates, parent_ids):
        n_sent = len(self.corpus)
        if n_sent == 0:
            self._cache = _SegmentCache(
                np.zeros(0), np.zeros(0, dtype=np.int32),
                np.zeros(len(candidates) + 1, dtype=np.int32),
            )
            return np.zeros(len(candidates))
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        qnorm = np.zeros(len(candidates))
        for i, query in enumerate(candidates):
            cols, weights = self._query_vec(query)
            indices.extend(cols)
            data.extend(weights)
            indptr.append(len(indices))
            qnorm[i] = sqrt(sum(w * w for w in weights))
        sel = sparse.csr_matrix(
            (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr)),
            shape=(len(candidates), self._mat.shape[1]),
        )
        dots = sel @ self._mat_t  # candidates x sentences, CSR
        per_row = np.diff(dots.indptr)
        row_ids = np.repeat(np.arange(len(candidates)), per_row)
        inv_q = np.divide(1.0, qnorm, out=np.zeros_like(qnorm), where=qnorm > 0.0)
        sims = dots.data * self._inv_norms[dots.indices] * inv_q[row_ids]
        self._cache = _SegmentCache(sims, dots.indices, dots.indptr)
        sums = _topk_sums(sims, dots.indptr, len(candidates), self.m_score)
        return sums / min(self.m_score, n_sent)

    def select(self, kept) -> None:
        self._beam = list(kept)

    def beam_details(self) -> list[QueryScore]:
        details = []
        n_sent = len(self.corpus)
        for row in self._beam:
            vals, rows = self._cache.segment(row)
            vals_top, rows_top = _top_rows_of_segment(vals, rows, self.m_score)
            details.append(
                QueryScore(
                    value=_top_counts_value(float(vals_top.sum()), self.m_score, n_sent),
                    per_sentence=tuple(
                        (sid, float(v)) for sid, v in zip(self._ids[rows_top], vals_top)
                    ),
                )
            )
        return details

    def rank_query(self, query, limit=None):
        if len(self.corpus) == 0:
            return []
        cols, data = self._query_vec(query)
        qnorm = sqrt(sum(w * w for w in data))
        if qnorm == 0.0:
            return []
        dots = self._mat[:, cols] @ np.asarray(data)
        sims = dots * self._inv_norms / qnorm
        nz = np.nonzero(sims)[0]
        order = nz[np.argsort(-sims[nz], kind="stable")]
        if limit is not None:
            order = order[:limit]
        return [(self._ids[r], float(sims[r])) for r in order]


SCORER_METHODS = ("ac", "ld", "levenshtein", "tfidf")


def make_scorer(
    method: str,
    corpus: CorpusIndex,
    m_score: int = 5,
    count_mode: str = "multiplicity",
) -> _ScorerBase:
    """Build the batch scorer for a method name ("ac", "ld", "tfidf")."""
    if method == "ac":
        return AhoCorasickScorer(corpus, m_score=m_score, count_mode=count_mode)
    if method in ("ld", "levenshtein"):
        return LevenshteinScorer(corpus, m_score=m_score)
    if method == "tfidf":
        return TfidfScorer(corpus, m_score=m_score)
    raise ValueError(f"unknown scoring method {method!r}; expected one of {SCORER_METHODS}")
