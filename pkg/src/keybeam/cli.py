"""Command-line surface.

Subcommands cover the whole pipeline::

    keybeam index      build and persist a corpus index
    keybeam simulate   sample keyword sets from an accuracy profile
    keybeam retrieve   run beam-search (or greedy) retrieval
    keybeam evaluate   score retrieval results against the corpus
    keybeam pipeline   simulate + retrieve + evaluate in one go
    keybeam gradcheck  run the loss-numerics check suite
    keybeam bench      index/automaton/retrieval performance report

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal invariant violation. All randomness flows through ``--seed``;
re-running any command with identical inputs produces identical output
bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    build_index,
    build_vocabulary,
    default_lemma_dictionary,
    default_stopwords,
    load_corpus_jsonl,
    load_index,
    load_lemma_dictionary,
    load_stopwords,
    preprocess,
    save_index,
)
from .errors import ConfigError, DataError
from .matcher import build_automaton
from .pipeline import evaluate_records, per_query_rows, run_retrievals, simulate_and_evaluate
from .representation import run_gradient_checks
from .retrieval import (
    KeywordSequence,
    bsr,
    read_keyword_sequences,
    read_result_records,
    write_keyword_sequences,
    write_results,
)
from .scoring import COUNT_MODES, make_scorer
from .simulator import (
    ClassifierProfile,
    derive_rank_distribution,
    load_profile,
    simulate_corpus,
)
from .synthetic import pseudo_words, synthetic_sentences

GRADCHECK_TOLERANCE = 1e-5


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


@dataclass
class RunConfig:
    """Validated knobs shared by the pipeline stages."""

    top_v: int = 100
    beam_width: int = 10
    m_score: int = 5
    k: int = 10
    k_used: int | None = None
    scorer: str = "ac"
    count_mode: str = "multiplicity"
    seed: int = 0
    eta: float = 0.1
    tau: float = 0.3
    top_n: int = 5

    def validate(self, vocabulary_size: int | None = None) -> None:
        if self.top_v < 1:
            raise ConfigError(f"vocabulary size must be >= 1, got {self.top_v}")
        if self.beam_width < 1:
            raise ConfigError(f"beam width must be >= 1, got {self.beam_width}")
        if self.m_score < 1:
            raise ConfigError(f"m-score must be >= 1, got {self.m_score}")
        if self.k < 1:
            raise ConfigError(f"keyword-set size k must be >= 1, got {self.k}")
        if self.k_used is not None and self.k_used < 1:
            raise ConfigError(f"k-used must be >= 1, got {self.k_used}")
        if self.count_mode not in COUNT_MODES:
            raise ConfigError(f"count mode must be one of {COUNT_MODES}")
        if not (0.0 <= self.eta < 1.0):
            raise ConfigError(f"mask ratio eta must lie in [0, 1), got {self.eta}")
        if self.tau <= 0.0:
            raise ConfigError(f"temperature tau must be positive, got {self.tau}")
        if self.top_n < 1:
            raise ConfigError(f"top-n must be >= 1, got {self.top_n}")
        if vocabulary_size is not None and self.k > vocabulary_size:
            raise ConfigError(
                f"keyword-set size k={self.k} exceeds the vocabulary size "
                f"{vocabulary_size}"
            )


def _require_files(*paths: str | None) -> None:
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"input file not found: {p}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="keybeam", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"keybeam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and persist a corpus index")
    p.add_argument("--corpus", required=True, help="corpus JSONL ({'id','text'} per line)")
    p.add_argument("--lemmas", help="lemma TSV (surface<TAB>lemma); default table if omitted")
    p.add_argument("--stopwords", help="stopword list, one per line; default list if omitted")
    p.add_argument("--top-v", type=int, default=100, help="vocabulary size (default 100)")
    p.add_argument("--out", required=True, help="output index file")

    p = sub.add_parser("simulate", help="sample keyword sets from an accuracy profile")
    p.add_argument("--index", required=True, help="index file from 'keybeam index'")
    p.add_argument("--profile", required=True, help="JSON map of k -> cumulative accuracy")
    p.add_argument("--k", type=int, default=10, help="keyword-set size (default 10)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--distractors", choices=("uniform", "frequency"), default="uniform",
        help="how distractor lemmas are drawn (default uniform)",
    )
    p.add_argument("--out", required=True, help="output keyword-set JSONL")

    p = sub.add_parser("retrieve", help="run retrieval over keyword-set JSONL")
    p.add_argument("--index", required=True)
    p.add_argument("--sets", required=True, help="keyword-set JSONL from 'keybeam simulate'")
    p.add_argument("--scorer", choices=("ac", "ld", "tfidf"), default="ac")
    p.add_argument("--strategy", choices=("bsr", "greedy"), default="bsr")
    p.add_argument("--beam-width", "-m", type=int, default=10, dest="beam_width")
    p.add_argument("--m-score", type=int, default=5, dest="m_score",
                   help="how many top sentences average into a query's score")
    p.add_argument("--count-mode", choices=COUNT_MODES, default="multiplicity")
    p.add_argument("--k-used", type=int, default=None, dest="k_used",
                   help="truncate each keyword set to this many candidates")
    p.add_argument("--top-n", type=int, default=5, dest="top_n")
    p.add_argument("--out", required=True, help="output results JSONL")

    p = sub.add_parser("evaluate", help="metrics for retrieval results")
    p.add_argument("--index", required=True)
    p.add_argument("--results", required=True, help="results JSONL from 'keybeam retrieve'")
    p.add_argument("--n", type=int, default=5, help="cutoff for recall/precision (default 5)")
    p.add_argument("--out", help="metrics JSON (stdout if omitted)")
    p.add_argument("--per-query", help="aligned per-query TSV output", dest="per_query")

    p = sub.add_parser("pipeline", help="simulate + retrieve + evaluate, tabulated")
    p.add_argument("--index", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--scorers", default="ac", help="comma list from {ac,ld,tfidf} (default ac)")
    p.add_argument("--strategy", choices=("bsr", "greedy"), default="bsr")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--k-used", type=int, default=None, dest="k_used")
    p.add_argument("--beam-width", "-m", type=int, default=10, dest="beam_width")
    p.add_argument("--m-score", type=int, default=5, dest="m_score")
    p.add_argument("--count-mode", choices=COUNT_MODES, default="multiplicity")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="full JSON report (stdout table either way)")

    p = sub.add_parser("gradcheck", help="loss-numerics check suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=20, help="random points per check")
    p.add_argument("--tau", type=float, default=0.3)
    p.add_argument("--eta", type=float, default=0.1)

    p = sub.add_parser("bench", help="performance report on a synthetic corpus")
    p.add_argument("--sentences", type=int, default=10000)
    p.add_argument("--vocab", type=int, default=5000)
    p.add_argument("--retrievals", type=int, default=1000)
    p.add_argument("--num-sets", type=int, default=7, dest="num_sets",
                   help="keyword sets per retrieval (default 7)")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--beam-width", "-m", type=int, default=10, dest="beam_width")
    p.add_argument("--patterns", type=int, default=10000,
                   help="patterns for the automaton throughput measurement")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON report (stdout lines either way)")

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies


def cmd_index(args) -> int:
    _require_files(args.corpus, args.lemmas, args.stopwords)
    config = RunConfig(top_v=args.top_v)
    config.validate()
    dictionary = (
        load_lemma_dictionary(args.lemmas) if args.lemmas else default_lemma_dictionary()
    )
    stopwords = (
        load_stopwords(args.stopwords) if args.stopwords else default_stopwords()
    )
    raw = load_corpus_jsonl(args.corpus)
    processed = [preprocess(s, dictionary, stopwords) for s in raw]
    empty = sum(1 for s in processed if not s.lemmas)
    vocabulary = build_vocabulary(processed, top_v=args.top_v)
    index = build_index(processed, vocabulary)
    save_index(index, args.out)
    print(
        f"indexed {len(index)} sentences "
        f"({empty} with no content lemmas), vocabulary {len(vocabulary)} -> {args.out}"
    )
    return 0


def cmd_simulate(args) -> int:
    _require_files(args.index, args.profile)
    index = load_index(args.index)
    config = RunConfig(k=args.k, seed=args.seed)
    config.validate(vocabulary_size=len(index.vocabulary))
    profile = load_profile(args.profile, vocabulary_size=len(index.vocabulary), k=args.k)
    dist = derive_rank_distribution(profile)
    sequences = simulate_corpus(index, dist, seed=args.seed, distractors=args.distractors)
    write_keyword_sequences(sequences, args.out)
    print(f"simulated {len(sequences)} keyword sequences (k={args.k}) -> {args.out}")
    return 0


def cmd_retrieve(args) -> int:
    _require_files(args.index, args.sets)
    config = RunConfig(
        beam_width=args.beam_width,
        m_score=args.m_score,
        k_used=args.k_used,
        scorer=args.scorer,
        count_mode=args.count_mode,
        top_n=args.top_n,
    )
    config.validate()
    index = load_index(args.index)
    sequences = read_keyword_sequences(args.sets)
    results = run_retrievals(
        sequences,
        index,
        scorer=args.scorer,
        strategy=args.strategy,
        beam_width=args.beam_width,
        k_used=args.k_used,
        top_n=args.top_n,
        m_score=args.m_score,
        count_mode=args.count_mode,
    )
    write_results(results, args.out)
    print(f"retrieved for {len(results)} sequences ({args.strategy}/{args.scorer}) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    _require_files(args.index, args.results)
    if args.n < 1:
        raise ConfigError(f"--n must be >= 1, got {args.n}")
    index = load_index(args.index)
    records = read_result_records(args.results)
    report = evaluate_records(records, index, n=args.n)
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"metrics -> {args.out}")
    else:
        print(text)
    if args.per_query:
        rows = per_query_rows(records, index, n=args.n)
        header = list(rows[0].keys()) if rows else []
        with open(args.per_query, "w", encoding="utf-8") as fh:
            fh.write("\t".join(header) + "\n")
            for row in rows:
                fh.write("\t".join(str(row[col]) for col in header) + "\n")
        print(f"per-query table -> {args.per_query}")
    return 0


def cmd_pipeline(args) -> int:
    _require_files(args.index, args.profile)
    scorers = tuple(s.strip() for s in args.scorers.split(",") if s.strip())
    for scorer in scorers:
        if scorer not in ("ac", "ld", "tfidf"):
            raise ConfigError(f"unknown scorer {scorer!r} in --scorers")
    if not scorers:
        raise ConfigError("--scorers must name at least one scorer")
    index = load_index(args.index)
    config = RunConfig(
        beam_width=args.beam_width,
        m_score=args.m_score,
        k=args.k,
        k_used=args.k_used,
        count_mode=args.count_mode,
        seed=args.seed,
        top_n=args.n,
    )
    config.validate(vocabulary_size=len(index.vocabulary))
    profile = load_profile(args.profile, vocabulary_size=len(index.vocabulary), k=args.k)
    dist = derive_rank_distribution(profile)
    report = simulate_and_evaluate(
        index,
        dist,
        seed=args.seed,
        scorers=scorers,
        strategy=args.strategy,
        beam_width=args.beam_width,
        k_used=args.k_used,
        m_score=args.m_score,
        count_mode=args.count_mode,
        n=args.n,
    )
    _print_pipeline_table(report, n=args.n)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        print(f"report -> {args.out}")
    return 0


def _print_pipeline_table(report: dict, n: int) -> None:
    print(f"queries: {report['queries']}   seed: {report['seed']}")
    header = f"{'scorer':<8}{'stratum':<8}{'queries':>8}{f'recall@{n}':>12}{f'precision@{n}':>14}{'BLEU-1':>10}{'BLEU-4':>10}"
    print(header)
    for scorer, metrics in report["scorers"].items():
        for stratum, entry in metrics["strata"].items():
            if entry.get("queries", 0) == 0:
                print(f"{scorer:<8}{stratum:<8}{0:>8}")
                continue
            print(
                f"{scorer:<8}{stratum:<8}{entry['queries']:>8}"
                f"{entry[f'recall_at_{n}']:>12.4f}{entry[f'precision_at_{n}']:>14.4f}"
                f"{entry['bleu_1']:>10.4f}{entry['bleu_4']:>10.4f}"
            )


def cmd_gradcheck(args) -> int:
    config = RunConfig(eta=args.eta, tau=args.tau, seed=args.seed)
    config.validate()
    if args.points < 1:
        raise ConfigError(f"--points must be >= 1, got {args.points}")
    report = run_gradient_checks(seed=args.seed, n_points=args.points)
    worst = max(report.values())
    for name, err in report.items():
        print(f"{name:<22} max relative error {err:.3e}")
    rng = np.random.default_rng(args.seed)
    draws = rng.random((200_000, 8)) >= args.eta
    masked_fraction = 1.0 - float(draws.mean())
    print(f"{'masking':<22} empirical masked fraction {masked_fraction:.4f} (eta={args.eta})")
    print(f"overall max relative error {worst:.3e}")
    if worst > GRADCHECK_TOLERANCE:
        print(f"FAIL: exceeds tolerance {GRADCHECK_TOLERANCE:.0e}", file=sys.stderr)
        return 3
    return 0


def cmd_bench(args) -> int:
    if args.sentences < 1 or args.vocab < 1 or args.patterns < 1:
        raise ConfigError("--sentences, --vocab and --patterns must be >= 1")
    if args.retrievals < 0:
        raise ConfigError(f"--retrievals must be >= 0, got {args.retrievals}")
    config = RunConfig(beam_width=args.beam_width, k=args.k, seed=args.seed)
    config.validate(vocabulary_size=args.vocab)
    report: dict = {"config": vars(args).copy()}
    report["config"].pop("command", None)

    # corpus indexing
    lo = max(args.num_sets, 5)
    raw = synthetic_sentences(
        args.sentences, vocab_size=args.vocab, length_range=(lo, lo + 7), seed=args.seed
    )
    dictionary = default_lemma_dictionary()
    stopwords = default_stopwords()
    t0 = time.perf_counter()
    processed = [preprocess(s, dictionary, stopwords) for s in raw]
    distinct = len({lemma for s in processed for lemma in s.lemmas})
    vocabulary = build_vocabulary(processed, top_v=min(args.vocab, distinct))
    index = build_index(processed, vocabulary)
    index_seconds = time.perf_counter() - t0
    report["index"] = {"sentences": len(index), "seconds": round(index_seconds, 4)}
    print(f"indexed {len(index)} sentences in {index_seconds:.3f}s")

    # automaton build throughput (and linear-scaling ratio); shuffled so the
    # 1/10th subset has the same prefix density as the full set
    patterns = pseudo_words(max(args.patterns, 1000))[: args.patterns]
    rng = np.random.default_rng(args.seed)
    rng.shuffle(patterns)

    def _best_of(pats, repeats=3):
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            build_automaton(pats)
            times.append(time.perf_counter() - t0)
        return min(times)

    full_seconds = _best_of(patterns)
    tenth = max(len(patterns) // 10, 1)
    tenth_seconds = _best_of(patterns[:tenth])
    throughput = len(patterns) / full_seconds
    scaling = full_seconds / (10 * tenth_seconds) if tenth_seconds > 0 else float("nan")
    report["automaton"] = {
        "patterns": len(patterns),
        "seconds": round(full_seconds, 4),
        "patterns_per_second": round(throughput),
        "scaling_ratio_vs_linear": round(scaling, 3),
    }
    print(
        f"automaton: {len(patterns)} patterns in {full_seconds:.3f}s "
        f"({throughput:,.0f} patterns/s, x{scaling:.2f} vs linear extrapolation)"
    )

    # retrieval latency
    if args.retrievals > 0:
        profile = ClassifierProfile(
            topk_accuracy={1: 0.0866, 5: 0.2490, 10: 0.3640},
            vocabulary_size=len(index.vocabulary),
            k=args.k,
        )
        dist = derive_rank_distribution(profile)
        ids = [
            s.id
            for s in index.sentences
            if sum(lem in index.vocabulary for lem in s.lemmas) >= args.num_sets
        ]
        chosen = [ids[i % len(ids)] for i in range(args.retrievals)]
        sequences = simulate_corpus(index, dist, seed=args.seed, sentence_ids=chosen)
        trimmed = [
            KeywordSequence(sets=seq.sets[: args.num_sets], sentence_id=seq.sentence_id)
            for seq in sequences
        ]
        engine = make_scorer("ac", index, m_score=5)
        latencies = []
        t_all = time.perf_counter()
        for seq in trimmed:
            t0 = time.perf_counter()
            bsr(seq, index, scorer=engine, beam_width=args.beam_width)
            latencies.append(time.perf_counter() - t0)
        total = time.perf_counter() - t_all
        lat = np.array(latencies)
        report["retrieval"] = {
            "retrievals": len(trimmed),
            "num_sets": args.num_sets,
            "k": args.k,
            "beam_width": args.beam_width,
            "seconds_total": round(total, 4),
            "p50_ms": round(float(np.percentile(lat, 50)) * 1000, 3),
            "p99_ms": round(float(np.percentile(lat, 99)) * 1000, 3),
        }
        print(
            f"retrieval: {len(trimmed)} runs (L={args.num_sets}, k={args.k}, "
            f"m={args.beam_width}) in {total:.3f}s; "
            f"p50 {report['retrieval']['p50_ms']:.2f}ms, "
            f"p99 {report['retrieval']['p99_ms']:.2f}ms"
        )
    else:
        report["retrieval"] = {"retrievals": 0}
        print("retrieval: skipped (zero retrievals requested)")

    if args.out:
        Path(args.out).write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        print(f"report -> {args.out}")
    return 0


_COMMANDS = {
    "index": cmd_index,
    "simulate": cmd_simulate,
    "retrieve": cmd_retrieve,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
    "gradcheck": cmd_gradcheck,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything else is a bug, not bad input
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
