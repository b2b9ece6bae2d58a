"""Corpus ingestion, preprocessing and indexing.

A corpus is a set of sentences. Preprocessing lowercases and tokenizes the
text, maps each token to its lemma through a lookup dictionary (identity
fallback for unknown surface forms) and drops tokens found in a stopword
list. The result is an ordered lemma sequence per sentence, from which we
build a frequency-ranked vocabulary and an inverted index.

File formats owned by this module:

* corpus: JSON Lines, one ``{"id": str, "text": str}`` object per line;
* lemma dictionary: two-column TSV ``surface<TAB>lemma``;
* stopword list: one token per line (``#`` comments allowed);
* persisted index: a JSON container with a format tag and a checksum.

All files are UTF-8. Default lemma and stopword tables ship with the
package under ``keybeam/data/``.
"""

from __future__ import annotations

import hashlib
import json
import re
import warnings
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import DataError

_TOKEN_RE = re.compile(r"[0-9a-z]+")
_LEMMA_RE = re.compile(r"[0-9a-z]+\Z")

INDEX_FORMAT = "keybeam.index/v1"


def tokenize(text: str) -> list[str]:
    """Split text into lowercase tokens.

    Tokens are maximal runs of ASCII alphanumerics after lowercasing;
    punctuation and whitespace are discarded, digits are kept (so "19xx"
    stays a single token). Empty input yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RawSentence:
    """One corpus sentence before preprocessing."""

    id: str
    text: str


class LemmaDictionary:
    """Surface-form -> lemma lookup with identity fallback.

    Every lemma must be a fixed point of the mapping: if a lemma string is
    itself a dictionary key, it must map to itself. This guarantees that
    preprocessing is idempotent.
    """

    def __init__(self, entries: Mapping[str, str]):
        for surface, lemma in entries.items():
            if not _LEMMA_RE.match(surface) or not _LEMMA_RE.match(lemma):
                raise DataError(
                    f"lemma dictionary entries must be lowercase alphanumeric "
                    f"tokens: {surface!r} -> {lemma!r}"
                )
            target = entries.get(lemma)
            if target is not None and target != lemma:
                raise DataError(
                    f"lemma {lemma!r} (for {surface!r}) is not a fixed point: "
                    f"it maps onward to {target!r}"
                )
        self._entries = dict(entries)

    def lemma(self, token: str) -> str:
        return self._entries.get(token, token)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, token: str) -> bool:
        return token in self._entries


class StopwordList:
    """Case-insensitive membership test for function words to discard."""

    REQUIRED = frozenset({"the", "a", "an", "is"})

    def __init__(self, words: Iterable[str]):
        self._words = {w.lower() for w in words}
        missing = self.REQUIRED - self._words
        if missing:
            raise DataError(f"stopword list is missing {sorted(missing)}")

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._words

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self):
        return iter(sorted(self._words))


@dataclass(frozen=True)
class ProcessedSentence:
    """A sentence reduced to its ordered, stopword-free lemma sequence."""

    id: str
    lemmas: tuple[str, ...]
    original_text: str


def preprocess(
    sentence: RawSentence, dictionary: LemmaDictionary, stopwords: StopwordList
) -> ProcessedSentence:
    """Tokenize, lemmatize, then drop stopword lemmas, preserving order.

    A sentence whose tokens are all stopwords comes back with an empty
    lemma tuple; downstream stages flag those rather than fail here.
    """
    lemmas = tuple(
        lemma
        for lemma in (dictionary.lemma(tok) for tok in tokenize(sentence.text))
        if lemma not in stopwords
    )
    return ProcessedSentence(id=sentence.id, lemmas=lemmas, original_text=sentence.text)


@dataclass(frozen=True)
class Vocabulary:
    """The top-V lemmas by corpus frequency.

    Indices are dense 0..V-1 in order of descending frequency, ties broken
    lexicographically so builds are deterministic.
    """

    lemmas: tuple[str, ...]
    frequencies: tuple[int, ...]
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {lemma: i for i, lemma in enumerate(self.lemmas)}
        )

    def __len__(self) -> int:
        return len(self.lemmas)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._index

    def index_of(self, lemma: str) -> int:
        return self._index[lemma]

    def frequency(self, lemma: str) -> int:
        return self.frequencies[self._index[lemma]]


def build_vocabulary(
    sentences: Sequence[ProcessedSentence], top_v: int = 100
) -> Vocabulary:
    """Keep the ``top_v`` most frequent lemmas across the corpus.

    If the corpus has fewer distinct lemmas than requested, all of them are
    kept and a warning is emitted.
    """
    if top_v < 1:
        raise ValueError(f"top_v must be >= 1, got {top_v}")
    counts = Counter()
    for sentence in sentences:
        counts.update(sentence.lemmas)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    if len(ranked) < top_v:
        warnings.warn(
            f"corpus has only {len(ranked)} distinct lemmas; "
            f"vocabulary will be smaller than the requested {top_v}",
            stacklevel=2,
        )
    kept = ranked[:top_v]
    return Vocabulary(
        lemmas=tuple(lemma for lemma, _ in kept),
        frequencies=tuple(freq for _, freq in kept),
    )


@dataclass(frozen=True)
class CorpusIndex:
    """Immutable searchable corpus: sentences, vocabulary, inverted index.

    ``inverted`` maps each lemma occurring anywhere in the corpus to the
    sorted tuple of ids of sentences containing it. Sentence ids are
    ordered lexicographically throughout the package.
    """

    sentences: tuple[ProcessedSentence, ...]
    vocabulary: Vocabulary
    inverted: Mapping[str, tuple[str, ...]]
    _by_id: dict[str, ProcessedSentence] = field(
        repr=False, compare=False, default_factory=dict
    )
    _equivalents: dict[tuple[str, ...], tuple[str, ...]] = field(
        repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {s.id: s for s in self.sentences})
        groups: dict[tuple[str, ...], list[str]] = {}
        for s in self.sentences:
            groups.setdefault(s.lemmas, []).append(s.id)
        object.__setattr__(
            self,
            "_equivalents",
            {lemmas: tuple(sorted(ids)) for lemmas, ids in groups.items()},
        )

    def __len__(self) -> int:
        return len(self.sentences)

    def sentence(self, sentence_id: str) -> ProcessedSentence:
        return self._by_id[sentence_id]

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self._by_id

    def ids_for(self, lemma: str) -> tuple[str, ...]:
        """Ids of sentences containing ``lemma`` (empty tuple if absent)."""
        return self.inverted.get(lemma, ())

    def equivalent_ids(self, sentence_id: str) -> tuple[str, ...]:
        """Ids of all sentences with the same lemma sequence (incl. itself).

        Used as the relevant set in retrieval evaluation, so that corpora
        with near-duplicate entries do not under-report precision.
        """
        return self._equivalents[self.sentence(sentence_id).lemmas]

    def sorted_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sentences)


def build_index(
    sentences: Sequence[ProcessedSentence], vocabulary: Vocabulary
) -> CorpusIndex:
    """Assemble the immutable corpus index; rejects duplicate sentence ids."""
    seen: set[str] = set()
    for s in sentences:
        if s.id in seen:
            raise DataError(f"duplicate sentence id: {s.id!r}")
        seen.add(s.id)
    ordered = tuple(sorted(sentences, key=lambda s: s.id))
    posting: dict[str, list[str]] = {}
    for s in ordered:
        for lemma in set(s.lemmas):
            posting.setdefault(lemma, []).append(s.id)
    inverted = {lemma: tuple(ids) for lemma, ids in posting.items()}
    return CorpusIndex(sentences=ordered, vocabulary=vocabulary, inverted=inverted)


# ---------------------------------------------------------------------------
# file loading


def load_corpus_jsonl(path: str | Path) -> list[RawSentence]:
    """Read a corpus file: one ``{"id": ..., "text": ...}`` object per line."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                sid, text = record["id"], record["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed corpus line: {exc}")
            if not isinstance(sid, str) or not isinstance(text, str) or not text:
                raise DataError(f"{path}:{lineno}: 'id' and 'text' must be non-empty strings")
            sentences.append(RawSentence(id=sid, text=text))
    return sentences


def load_lemma_dictionary(path: str | Path) -> LemmaDictionary:
    """Read a two-column TSV of ``surface<TAB>lemma`` pairs."""
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'surface<TAB>lemma'")
            entries[parts[0]] = parts[1]
    return LemmaDictionary(entries)


def load_stopwords(path: str | Path) -> StopwordList:
    """Read a stopword list, one token per line."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.append(word)
    return StopwordList(words)


def default_lemma_dictionary() -> LemmaDictionary:
    """The lemma table bundled with the package."""
    text = resources.files("keybeam.data").joinpath("lemmas.tsv").read_text("utf-8")
    entries: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            surface, lemma = line.split("\t")
            entries[surface] = lemma
    return LemmaDictionary(entries)


def default_stopwords() -> StopwordList:
    """The stopword list bundled with the package.

    Deliberately conservative: pure grammatical words only. Function words
    that still carry content in a keyword setting (negations, temporal
    prepositions such as "during", quantity words) are retained.
    """
    text = resources.files("keybeam.data").joinpath("stopwords.txt").read_text("utf-8")
    return StopwordList(
        w for w in (line.strip() for line in text.splitlines())
        if w and not w.startswith("#")
    )


# ---------------------------------------------------------------------------
# index persistence


def _index_payload(index: CorpusIndex) -> str:
    payload = {
        "sentences": [
            {"id": s.id, "lemmas": list(s.lemmas), "text": s.original_text}
            for s in index.sentences
        ],
        "vocabulary": [
            [lemma, freq]
            for lemma, freq in zip(index.vocabulary.lemmas, index.vocabulary.frequencies)
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def save_index(index: CorpusIndex, path: str | Path) -> None:
    """Persist an index as a checksummed JSON container.

    Serialization is canonical (sorted keys, no whitespace), so the same
    in-memory index always produces byte-identical files.
    """
    body = _index_payload(index)
    container = {
        "format": INDEX_FORMAT,
        "checksum": hashlib.sha256(body.encode("utf-8")).hexdigest(),
        "payload": json.loads(body),
    }
    Path(path).write_text(
        json.dumps(container, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_index(path: str | Path) -> CorpusIndex:
    """Load a persisted index, verifying the format tag and checksum."""
    try:
        container = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a valid index file: {exc}")
    if container.get("format") != INDEX_FORMAT:
        raise DataError(
            f"{path}: unsupported index format {container.get('format')!r}, "
            f"expected {INDEX_FORMAT!r}"
        )
    body = json.dumps(container.get("payload"), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != container.get("checksum"):
        raise DataError(f"{path}: checksum mismatch; file is corrupt")
    payload = container["payload"]
    sentences = [
        ProcessedSentence(id=s["id"], lemmas=tuple(s["lemmas"]), original_text=s["text"])
        for s in payload["sentences"]
    ]
    vocabulary = Vocabulary(
        lemmas=tuple(lemma for lemma, _ in payload["vocabulary"]),
        frequencies=tuple(freq for _, freq in payload["vocabulary"]),
    )
    return build_index(sentences, vocabulary)
