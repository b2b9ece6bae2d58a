"""End-to-end experiment plumbing: simulate -> retrieve -> evaluate.

Works on in-memory objects; the command-line layer only adds file I/O.
Reports are plain dicts with deterministic key order so fixed seeds give
byte-identical serialized output.
"""

from __future__ import annotations

from collections.abc import Sequence

from .corpus import CorpusIndex
from .errors import DataError
from .evaluation import (
    RetrievalJudgment,
    bleu,
    mean_precision_at_n,
    mean_recall_at_n,
    precision_at_n,
    recall_at_n,
)
from .retrieval import (
    KeywordSequence,
    RetrievalResult,
    bsr,
    greedy_retrieve,
    result_to_record,
)
from .scoring import make_scorer
from .simulator import RankDistribution, simulate_corpus

DEFAULT_STRATA = (1, 5, 7)


def run_retrievals(
    sequences: Sequence[KeywordSequence],
    corpus: CorpusIndex,
    scorer: str = "ac",
    strategy: str = "bsr",
    beam_width: int = 10,
    k_used: int | None = None,
    top_n: int = 5,
    m_score: int = 5,
    count_mode: str = "multiplicity",
) -> list[RetrievalResult]:
    """Retrieve for every keyword sequence with one shared scorer."""
    if strategy not in ("bsr", "greedy"):
        raise ValueError(f"unknown strategy {strategy!r}")
    engine = make_scorer(scorer, corpus, m_score=m_score, count_mode=count_mode)
    results = []
    for seq in sequences:
        if strategy == "bsr":
            results.append(
                bsr(
                    seq,
                    corpus,
                    scorer=engine,
                    beam_width=beam_width,
                    k_used=k_used,
                    top_n=top_n,
                    m_score=m_score,
                    count_mode=count_mode,
                )
            )
        elif strategy == "greedy":
            results.append(
                greedy_retrieve(
                    seq,
                    corpus,
                    scorer=engine,
                    top_n=top_n,
                    m_score=m_score,
                    count_mode=count_mode,
                )
            )
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    return results


def _record_view(record) -> tuple[str | None, int, list[str]]:
    """(ground-truth id, number of keyword sets, ranked ids) of a result."""
    if isinstance(record, RetrievalResult):
        record = result_to_record(record)
    try:
        meta = record["metadata"]
        ranked = [sid for sid, _ in record["ranked"]]
        return meta.get("sentence_id"), int(meta["num_sets"]), ranked
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed retrieval record: {exc}")


def judge(record, corpus: CorpusIndex, n: int = 5) -> RetrievalJudgment:
    gt_id, _, ranked = _record_view(record)
    if gt_id is None or gt_id not in corpus:
        raise DataError(f"ground-truth sentence {gt_id!r} is not in the corpus")
    return RetrievalJudgment(
        retrieved=tuple(ranked[:n]),
        relevant=frozenset(corpus.equivalent_ids(gt_id)),
    )


def evaluate_records(
    records: Sequence,
    corpus: CorpusIndex,
    n: int = 5,
    bleu_orders: tuple[int, ...] = (1, 4),
    strata: tuple[int, ...] = DEFAULT_STRATA,
) -> dict:
    """Recall@n / precision@n / BLEU over keyword-count strata.

    A stratum ``t`` holds the queries with at least ``t`` keyword sets.
    BLEU compares the top-ranked sentence's lemmas against the ground
    truth's lemmas.
    """
    views = [_record_view(r) for r in records]
    report: dict = {"n": n, "strata": {}}
    for threshold in strata:
        selected = [
            (record, view) for record, view in zip(records, views)
            if view[1] >= threshold
        ]
        if not selected:
            report["strata"][f"T>={threshold}"] = {"queries": 0}
            continue
        judgments = [judge(record, corpus, n=n) for record, _ in selected]
        entry = {
            "queries": len(selected),
            f"recall_at_{n}": mean_recall_at_n(judgments, n),
            f"precision_at_{n}": mean_precision_at_n(judgments, n),
        }
        for order in bleu_orders:
            scores = []
            for _, (gt_id, _, ranked) in selected:
                reference = corpus.sentence(gt_id).lemmas
                candidate = (
                    corpus.sentence(ranked[0]).lemmas if ranked else ()
                )
                scores.append(bleu(candidate, reference, max_n=order))
            entry[f"bleu_{order}"] = sum(scores) / len(scores)
        report["strata"][f"T>={threshold}"] = entry
    return report


def per_query_rows(records: Sequence, corpus: CorpusIndex, n: int = 5) -> list[dict]:
    """One row per query, for the aligned per-query TSV."""
    rows = []
    for record in records:
        gt_id, num_sets, ranked = _record_view(record)
        judgment = judge(record, corpus, n=n)
        reference = corpus.sentence(gt_id).lemmas
        candidate = corpus.sentence(ranked[0]).lemmas if ranked else ()
        rows.append(
            {
                "sentence_id": gt_id,
                "num_sets": num_sets,
                "top1": ranked[0] if ranked else "",
                f"recall_at_{n}": recall_at_n(judgment, n),
                f"precision_at_{n}": precision_at_n(judgment, n),
                "bleu_1": bleu(candidate, reference, max_n=1),
                "bleu_4": bleu(candidate, reference, max_n=4),
            }
        )
    return rows


def simulate_and_evaluate(
    corpus: CorpusIndex,
    dist: RankDistribution,
    seed: int,
    scorers: Sequence[str] = ("ac",),
    strategy: str = "bsr",
    beam_width: int = 10,
    k_used: int | None = None,
    m_score: int = 5,
    count_mode: str = "multiplicity",
    n: int = 5,
    sentence_ids: Sequence[str] | None = None,
    strata: tuple[int, ...] = DEFAULT_STRATA,
) -> dict:
    """Simulate keyword sets once, then retrieve and score per scorer.

    All scorers see the same simulated keyword sets, so rows are
    comparable. Returns {"seed": ..., "scorers": {name: metrics}}.
    """
    sequences = simulate_corpus(corpus, dist, seed=seed, sentence_ids=sentence_ids)
    report: dict = {"seed": seed, "queries": len(sequences), "scorers": {}}
    for scorer in scorers:
        results = run_retrievals(
            sequences,
            corpus,
            scorer=scorer,
            strategy=strategy,
            beam_width=beam_width,
            k_used=k_used,
            top_n=n,
            m_score=m_score,
            count_mode=count_mode,
        )
        report["scorers"][scorer] = evaluate_records(
            results, corpus, n=n, strata=strata
        )
    return report
