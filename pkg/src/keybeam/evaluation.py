"""Ranking and retrieval metrics: top-k accuracy, recall@n, precision@n, BLEU.

Retrieval metrics treat as relevant *every* corpus sentence whose
preprocessed lemma sequence equals the ground truth's, so corpora with
duplicate or near-duplicate entries are judged fairly (several of the
top-n slots can legitimately be relevant at once).

BLEU here is the sentence-level score against a single reference: clipped
modified n-gram precisions, geometric mean, brevity penalty, and no
smoothing — if any n-gram order has zero matches the score is exactly 0.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from math import exp, log


@dataclass(frozen=True)
class RankedPrediction:
    """An ordered candidate list plus the true label, for top-k accuracy."""

    candidates: tuple[str, ...]
    ground_truth: str

    def __post_init__(self):
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidates must be distinct")


@dataclass(frozen=True)
class RetrievalJudgment:
    """Top-n retrieved sentence ids against the relevant-id set."""

    retrieved: tuple[str, ...]
    relevant: frozenset[str]


def top_k_accuracy(predictions: Sequence[RankedPrediction], k: int) -> float:
    """Fraction of predictions whose truth appears in the first k candidates."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not predictions:
        raise ValueError("cannot compute accuracy over zero predictions")
    hits = sum(p.ground_truth in p.candidates[:k] for p in predictions)
    return hits / len(predictions)


def recall_at_n(judgment: RetrievalJudgment, n: int) -> int:
    """1 if any relevant sentence appears in the top n, else 0."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return int(bool(judgment.relevant.intersection(judgment.retrieved[:n])))


def precision_at_n(judgment: RetrievalJudgment, n: int) -> float:
    """Fraction of the top n that is relevant."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return len(judgment.relevant.intersection(judgment.retrieved[:n])) / n


def mean_recall_at_n(judgments: Sequence[RetrievalJudgment], n: int) -> float:
    if not judgments:
        raise ValueError("cannot aggregate zero judgments")
    return sum(recall_at_n(j, n) for j in judgments) / len(judgments)


def mean_precision_at_n(judgments: Sequence[RetrievalJudgment], n: int) -> float:
    if not judgments:
        raise ValueError("cannot aggregate zero judgments")
    return sum(precision_at_n(j, n) for j in judgments) / len(judgments)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    candidate: Sequence[str],
    reference: Sequence[str],
    max_n: int = 4,
    weights: Sequence[float] | None = None,
) -> float:
    """Sentence BLEU of a candidate against one reference, in [0, 1].

    Geometric mean of clipped modified n-gram precisions (orders 1..max_n,
    uniform weights by default) times the brevity penalty
    exp(1 - len(reference)/len(candidate)) when the candidate is shorter.
    Any n-gram order with zero matches (or an empty candidate) gives 0; no
    smoothing is applied.
    """
    if not 1 <= max_n <= 4:
        raise ValueError(f"max_n must be in 1..4, got {max_n}")
    if weights is None:
        weights = [1.0 / max_n] * max_n
    if len(weights) != max_n:
        raise ValueError(f"need {max_n} weights, got {len(weights)}")
    candidate = list(candidate)
    reference = list(reference)
    if not candidate:
        return 0.0

    log_precisions = []
    for order, weight in enumerate(weights, start=1):
        cand_counts = _ngram_counts(candidate, order)
        total = sum(cand_counts.values())
        if total == 0:
            return 0.0  # candidate shorter than this n-gram order
        ref_counts = _ngram_counts(reference, order)
        clipped = sum(
            min(count, ref_counts.get(gram, 0)) for gram, count in cand_counts.items()
        )
        if clipped == 0:
            return 0.0
        log_precisions.append(weight * log(clipped / total))

    if len(candidate) < len(reference):
        brevity = exp(1.0 - len(reference) / len(candidate))
    else:
        brevity = 1.0
    return brevity * exp(sum(log_precisions))
