"""Synthetic corpora for experiments and benchmarks.

Sentences are drawn from a deterministic pseudo-word vocabulary
(consonant-vowel syllable compounds, filtered against the default
stopword and lemma tables so preprocessing leaves them untouched). Word
frequencies can follow a Zipf-like power law, which gives the TF-IDF
baseline a realistic document-frequency spread, or be uniform.
"""

from __future__ import annotations

import itertools

import numpy as np

from .corpus import (
    CorpusIndex,
    ProcessedSentence,
    RawSentence,
    Vocabulary,
    build_index,
    build_vocabulary,
    default_lemma_dictionary,
    default_stopwords,
)

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def pseudo_words(count: int) -> list[str]:
    """The first ``count`` pseudo-words, deterministic across runs."""
    stop = default_stopwords()
    dictionary = default_lemma_dictionary()
    syllables = [c + v for c, v in itertools.product(_CONSONANTS, _VOWELS)]
    words = []
    for parts in itertools.chain(
        itertools.product(syllables, repeat=2), itertools.product(syllables, repeat=3)
    ):
        word = "".join(parts)
        if word in stop or dictionary.lemma(word) != word:
            continue
        words.append(word)
        if len(words) == count:
            return words
    raise ValueError(f"cannot generate {count} pseudo-words")


def synthetic_sentences(
    n_sentences: int,
    vocab_size: int = 100,
    length_range: tuple[int, int] = (5, 14),
    seed: int = 0,
    distinct_lemmas: bool = True,
    distribution: str = "zipf",
    duplicate_free: bool = True,
    filler_range: tuple[int, int] = (0, 0),
    filler_pool: int = 10_000,
) -> list[RawSentence]:
    """Random sentences over a pseudo-word vocabulary.

    ``distinct_lemmas`` samples each sentence's core words without
    replacement; ``duplicate_free`` guarantees no two sentences share a
    word sequence. ``filler_range`` mixes in that many extra words drawn
    from a large disjoint pool, shuffled into the sentence: they model the
    long tail of words a fixed-vocabulary word classifier cannot emit, so
    sentences are longer than their keyword-set sequences.
    """
    lo, hi = length_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad length range {length_range}")
    if distinct_lemmas and hi > vocab_size:
        raise ValueError("sentence length cannot exceed vocabulary size")
    f_lo, f_hi = filler_range
    if not 0 <= f_lo <= f_hi:
        raise ValueError(f"bad filler range {filler_range}")
    all_words = pseudo_words(vocab_size + (filler_pool if f_hi else 0))
    words = np.array(all_words[:vocab_size], dtype=object)
    filler = np.array(all_words[vocab_size:], dtype=object)
    if distribution == "zipf":
        # shifted head: these are content words (stopwords already gone),
        # so no single lemma should blanket most of the corpus
        weights = 1.0 / (np.arange(1, vocab_size + 1) + 0.02 * vocab_size) ** 1.1
        weights /= weights.sum()
    elif distribution == "uniform":
        weights = None
    else:
        raise ValueError(f"unknown distribution {distribution!r}")

    rng = np.random.default_rng(seed)
    sentences: list[RawSentence] = []
    seen: set[tuple[str, ...]] = set()
    attempts = 0
    while len(sentences) < n_sentences:
        attempts += 1
        if attempts > 50 * n_sentences:
            raise RuntimeError("could not generate enough distinct sentences")
        length = int(rng.integers(lo, hi + 1))
        picks = rng.choice(
            vocab_size, size=length, replace=not distinct_lemmas, p=weights
        )
        chosen = list(words[picks])
        if f_hi:
            n_filler = int(rng.integers(f_lo, f_hi + 1))
            chosen.extend(filler[rng.choice(len(filler), size=n_filler, replace=False)])
            rng.shuffle(chosen)
        chosen = tuple(chosen)
        if duplicate_free:
            if chosen in seen:
                continue
            seen.add(chosen)
        sid = f"s{len(sentences):05d}"
        sentences.append(RawSentence(id=sid, text=" ".join(chosen)))
    return sentences


def synthetic_index(
    n_sentences: int,
    vocab_size: int = 100,
    length_range: tuple[int, int] = (5, 14),
    seed: int = 0,
    top_v: int | None = None,
    distinct_lemmas: bool = True,
    distribution: str = "zipf",
    duplicate_free: bool = True,
    filler_range: tuple[int, int] = (0, 0),
    filler_pool: int = 10_000,
) -> CorpusIndex:
    """A ready-to-search index over a synthetic corpus.

    The sentences use pseudo-words untouched by preprocessing, so lemma
    sequences equal the generated word sequences. With a filler range, the
    vocabulary is restricted to the core words (fillers stay out of the
    classifier's reach), which is how a top-V-by-frequency cut behaves on
    a corpus whose tail words are rare.
    """
    raw = synthetic_sentences(
        n_sentences,
        vocab_size=vocab_size,
        length_range=length_range,
        seed=seed,
        distinct_lemmas=distinct_lemmas,
        distribution=distribution,
        duplicate_free=duplicate_free,
        filler_range=filler_range,
        filler_pool=filler_pool,
    )
    processed = [
        ProcessedSentence(id=s.id, lemmas=tuple(s.text.split()), original_text=s.text)
        for s in raw
    ]
    core = set(pseudo_words(vocab_size))
    if top_v is None:
        top_v = len({lemma for s in processed for lemma in s.lemmas if lemma in core})
    vocabulary = build_vocabulary(
        [
            ProcessedSentence(
                id=s.id,
                lemmas=tuple(lemma for lemma in s.lemmas if lemma in core),
                original_text=s.original_text,
            )
            for s in processed
        ],
        top_v=top_v,
    )
    return build_index(processed, vocabulary)


def restrict_vocabulary(vocabulary: Vocabulary, size: int) -> Vocabulary:
    """The highest-frequency ``size`` entries of an existing vocabulary."""
    if size < 1 or size > len(vocabulary):
        raise ValueError(f"cannot restrict vocabulary of {len(vocabulary)} to {size}")
    return Vocabulary(
        lemmas=vocabulary.lemmas[:size], frequencies=vocabulary.frequencies[:size]
    )
