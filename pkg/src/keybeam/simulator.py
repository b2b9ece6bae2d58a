"""Synthetic keyword sets calibrated to a classifier accuracy profile.

Instead of a trained word-level classifier, retrieval experiments can be
driven by a sampler whose rank statistics match a measured cumulative
top-k accuracy curve: given anchors acc(k1) < acc(k2) < ..., the
probability mass between consecutive anchors is spread uniformly over the
intervening ranks, and the remainder is the probability that the true
word does not appear in the set at all.

For each word slot the sampler draws the true lemma's rank (or a miss),
fills the remaining slots with distinct distractor lemmas from the
vocabulary, and attaches strictly decreasing pseudo-probabilities
(cosmetic; retrieval uses only candidate identity and order, but files
round-trip with real classifier outputs).

All sampling is a pure function of (inputs, seed). Per-sentence child
seeds are spawned deterministically from the master seed so corpora can
be simulated in any order or in parallel.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusIndex, ProcessedSentence, Vocabulary
from .errors import DataError
from .retrieval import KeywordSequence, KeywordSet


@dataclass(frozen=True)
class ClassifierProfile:
    """Cumulative top-k accuracy anchors of a word-level classifier."""

    topk_accuracy: dict[int, float]
    vocabulary_size: int
    k: int

    def __post_init__(self):
        if not self.topk_accuracy:
            raise ValueError("profile needs at least one top-k accuracy anchor")
        anchors = sorted(self.topk_accuracy)
        if anchors[0] < 1:
            raise ValueError("top-k anchors must be >= 1")
        values = [self.topk_accuracy[k] for k in anchors]
        if any(not (0.0 <= v <= 1.0) for v in values):
            raise ValueError("accuracies must lie in [0, 1]")
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValueError("cumulative accuracies must be non-decreasing in k")
        if self.k < 1:
            raise ValueError("keyword-set size k must be >= 1")
        if self.vocabulary_size < self.k:
            raise ValueError(
                f"vocabulary size {self.vocabulary_size} is smaller than the "
                f"keyword-set size {self.k}"
            )


def load_profile(
    path: str | Path, vocabulary_size: int, k: int | None = None
) -> ClassifierProfile:
    """Read a profile file: a JSON map of k -> cumulative accuracy."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        anchors = {int(key): float(value) for key, value in raw.items()}
    except (json.JSONDecodeError, ValueError, AttributeError) as exc:
        raise DataError(f"{path}: not a valid profile file: {exc}")
    if k is None:
        k = max(anchors)
    return ClassifierProfile(topk_accuracy=anchors, vocabulary_size=vocabulary_size, k=k)


@dataclass(frozen=True)
class RankDistribution:
    """Per-rank probability that the true lemma lands at rank r (1..k).

    ``p_rank[r-1]`` is the probability of rank r; ``p_miss`` is the
    probability the true lemma is absent from the set. The total mass sums
    to one.
    """

    p_rank: np.ndarray
    p_miss: float

    def __post_init__(self):
        total = float(self.p_rank.sum()) + self.p_miss
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"rank distribution mass {total} != 1")
        if (self.p_rank < 0).any() or self.p_miss < 0:
            raise ValueError("rank probabilities must be non-negative")

    @property
    def k(self) -> int:
        return int(self.p_rank.shape[0])

    def cumulative(self, k: int) -> float:
        """Implied top-k accuracy, for calibration checks."""
        return float(self.p_rank[:k].sum())


def derive_rank_distribution(profile: ClassifierProfile) -> RankDistribution:
    """Spread anchor-to-anchor accuracy gains uniformly over ranks.

    With anchors k1 < k2, every rank in (k1, k2] receives
    (acc(k2) - acc(k1)) / (k2 - k1); an implicit anchor acc(0) = 0 seeds
    the curve. Ranks beyond the last anchor receive no mass (the
    classifier is not credited beyond its measured range).
    """
    anchors = sorted(profile.topk_accuracy)
    p = np.zeros(profile.k, dtype=np.float64)
    prev_k, prev_acc = 0, 0.0
    for anchor in anchors:
        share = (profile.topk_accuracy[anchor] - prev_acc) / (anchor - prev_k)
        lo = min(prev_k, profile.k)
        hi = min(anchor, profile.k)
        p[lo:hi] = share
        prev_k, prev_acc = anchor, profile.topk_accuracy[anchor]
    return RankDistribution(p_rank=p, p_miss=1.0 - float(p.sum()))


def sample_keyword_set(
    true_lemma: str,
    dist: RankDistribution,
    vocab: Vocabulary,
    rng: np.random.Generator,
    position: int = 0,
    distractors: str = "uniform",
    neighbor_table: dict[str, Sequence[str]] | None = None,
) -> KeywordSet:
    """Draw one keyword set with the true lemma placed per ``dist``.

    Distractors are distinct lemmas sampled without replacement from the
    vocabulary minus the true lemma: uniformly by default, proportional to
    corpus frequency with ``distractors="frequency"``, or preferring the
    supplied similarity neighbors when ``neighbor_table`` has an entry for
    the true lemma (remaining slots fall back to uniform draws).
    Pseudo-probabilities are a softmax over a decreasing linear score, so
    they are strictly decreasing and sum to one.
    """
    k = dist.k
    if len(vocab) < k:
        raise ValueError(
            f"vocabulary of size {len(vocab)} cannot fill keyword sets of size {k}"
        )
    if true_lemma not in vocab:
        raise ValueError(f"true lemma {true_lemma!r} is not in the vocabulary")

    u = rng.random()
    cum = np.cumsum(dist.p_rank)
    hit = np.searchsorted(cum, u, side="right")
    rank = hit if hit < k else None  # None: true lemma missing from the set

    pool = [lemma for lemma in vocab.lemmas if lemma != true_lemma]
    n_distract = k - (rank is not None)
    chosen: list[str] = []
    if neighbor_table is not None:
        for neighbor in neighbor_table.get(true_lemma, ()):
            if len(chosen) >= n_distract:
                break
            if neighbor in vocab and neighbor != true_lemma and neighbor not in chosen:
                chosen.append(neighbor)
    remaining = [lemma for lemma in pool if lemma not in set(chosen)]
    need = n_distract - len(chosen)
    if need:
        if distractors == "uniform":
            weights = None
        elif distractors == "frequency":
            freq = np.array([vocab.frequency(w) for w in remaining], dtype=np.float64)
            weights = freq / freq.sum()
        else:
            raise ValueError(f"unknown distractor mode {distractors!r}")
        picks = rng.choice(len(remaining), size=need, replace=False, p=weights)
        chosen.extend(remaining[i] for i in picks)

    words = chosen
    if rank is not None:
        words = chosen[:rank] + [true_lemma] + chosen[rank:]
    probs = _pseudo_probabilities(k)
    return KeywordSet(
        candidates=tuple(zip(words, probs)),
        position=position,
    )


def _pseudo_probabilities(k: int) -> np.ndarray:
    scores = -np.arange(k, dtype=np.float64)
    exp = np.exp(scores)
    return exp / exp.sum()


def simulate_sentence(
    sentence: ProcessedSentence,
    dist: RankDistribution,
    vocab: Vocabulary,
    rng: np.random.Generator,
    distractors: str = "uniform",
    neighbor_table: dict[str, Sequence[str]] | None = None,
) -> KeywordSequence:
    """One keyword set per in-vocabulary lemma, independently sampled.

    Out-of-vocabulary lemmas produce no set (the classifier cannot emit
    them); a sentence with no in-vocabulary lemma yields an empty sequence
    that callers should filter out.
    """
    sets = []
    position = 0
    for lemma in sentence.lemmas:
        if lemma not in vocab:
            continue
        sets.append(
            sample_keyword_set(
                lemma,
                dist,
                vocab,
                rng,
                position=position,
                distractors=distractors,
                neighbor_table=neighbor_table,
            )
        )
        position += 1
    return KeywordSequence(sets=tuple(sets), sentence_id=sentence.id)


def simulate_corpus(
    corpus: CorpusIndex,
    dist: RankDistribution,
    seed: int,
    sentence_ids: Sequence[str] | None = None,
    distractors: str = "uniform",
    neighbor_table: dict[str, Sequence[str]] | None = None,
) -> list[KeywordSequence]:
    """Simulate keyword sequences for (a subset of) the corpus.

    Each sentence's child seed is derived from the master seed and the
    sentence id alone, so a sentence receives the same keyword sets no
    matter which subset is simulated or in what order. Sentences with no
    in-vocabulary lemma are skipped.
    """
    ids = list(sentence_ids) if sentence_ids is not None else list(corpus.sorted_ids())
    sequences = []
    for sid in ids:
        digest = hashlib.sha256(sid.encode("utf-8")).digest()
        child = np.random.SeedSequence(
            [seed, int.from_bytes(digest[:8], "big")]
        )
        seq = simulate_sentence(
            corpus.sentence(sid),
            dist,
            corpus.vocabulary,
            np.random.default_rng(child),
            distractors=distractors,
            neighbor_table=neighbor_table,
        )
        if len(seq):
            sequences.append(seq)
    return sequences
