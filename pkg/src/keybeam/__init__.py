"""keybeam: sentence retrieval from noisy keyword sets.

A word-level classifier that cannot nail its top-1 prediction can still
be useful: for each word slot it emits a keyword set (its top-k candidate
lemmas), and a beam search over one-candidate-per-slot combination
queries, scored by whole-token occurrence counts against an indexed
corpus, recovers the sentence. This package provides the corpus
preprocessing and indexing, the Aho-Corasick matcher and the scoring
methods, beam-search and greedy retrieval, a calibrated simulator that
stands in for the classifier, the training-loss numerics of the
classifier's representation learning stage, and an evaluation suite.
"""

from .corpus import (
    CorpusIndex,
    LemmaDictionary,
    ProcessedSentence,
    RawSentence,
    StopwordList,
    Vocabulary,
    build_index,
    build_vocabulary,
    default_lemma_dictionary,
    default_stopwords,
    load_corpus_jsonl,
    load_index,
    preprocess,
    save_index,
    tokenize,
)
from .errors import ConfigError, DataError, InvariantError, KeybeamError
from .evaluation import (
    RankedPrediction,
    RetrievalJudgment,
    bleu,
    precision_at_n,
    recall_at_n,
    top_k_accuracy,
)
from .matcher import Automaton, build_automaton, count_occurrences
from .retrieval import (
    Beam,
    KeywordSequence,
    KeywordSet,
    RetrievalResult,
    bsr,
    expand,
    greedy_retrieve,
    prune,
)
from .scoring import (
    CombinationQuery,
    QueryScore,
    TfidfModel,
    ac_score,
    build_tfidf_model,
    levenshtein_score,
    make_scorer,
    rank_sentences,
    tfidf_score,
    token_edit_distance,
)
from .simulator import (
    ClassifierProfile,
    RankDistribution,
    derive_rank_distribution,
    sample_keyword_set,
    simulate_corpus,
    simulate_sentence,
)

__version__ = "0.1.0"

__all__ = [
    "Automaton",
    "Beam",
    "ClassifierProfile",
    "CombinationQuery",
    "ConfigError",
    "CorpusIndex",
    "DataError",
    "InvariantError",
    "KeybeamError",
    "KeywordSequence",
    "KeywordSet",
    "LemmaDictionary",
    "ProcessedSentence",
    "QueryScore",
    "RankDistribution",
    "RankedPrediction",
    "RawSentence",
    "RetrievalJudgment",
    "RetrievalResult",
    "StopwordList",
    "TfidfModel",
    "Vocabulary",
    "ac_score",
    "bleu",
    "bsr",
    "build_automaton",
    "build_index",
    "build_tfidf_model",
    "build_vocabulary",
    "count_occurrences",
    "default_lemma_dictionary",
    "default_stopwords",
    "derive_rank_distribution",
    "expand",
    "greedy_retrieve",
    "levenshtein_score",
    "load_corpus_jsonl",
    "load_index",
    "make_scorer",
    "precision_at_n",
    "preprocess",
    "prune",
    "rank_sentences",
    "recall_at_n",
    "sample_keyword_set",
    "save_index",
    "simulate_corpus",
    "simulate_sentence",
    "tfidf_score",
    "token_edit_distance",
    "tokenize",
    "top_k_accuracy",
    "__version__",
]
