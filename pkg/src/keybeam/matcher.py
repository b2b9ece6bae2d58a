"""Aho-Corasick multi-pattern automaton over lemma sequences.

The automaton is the classic construction: a goto trie over the characters
of all patterns, failure links computed breadth-first (the failure link of
a node points to the longest proper suffix of its path that is also a path
in the trie), and output sets propagated along failure links so that every
state knows exactly which patterns end there.

Matching here is whole-token: the corpus is lemmatized, so a pattern must
equal an entire token ("he" must not match inside "hepburn" or "she"). We
run each token through the automaton from the root; after consuming the
token, the output set of the reached state holds exactly the patterns that
are suffixes of the token, and the whole-token matches are those whose
length equals the token length. Separator sentinels between tokens are
unnecessary because the automaton is restarted at each token boundary.

States are numbered in trie insertion order, so identical pattern lists
always produce identical automata, state numbering included. The state
count is bounded by 1 + the total pattern length.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Sequence


class Automaton:
    """Immutable multi-pattern matcher; build with :func:`build_automaton`.

    Attributes
    ----------
    patterns : tuple[str, ...]
        The pattern strings, indexed by pattern id.
    goto : list[dict[str, int]]
        Per-state character transitions (trie edges; state 0 is the root).
    fail : list[int]
        Per-state failure links (root's failure link is the root).
    out : list[tuple[int, ...]]
        Per-state output sets: ids of every pattern that is a suffix of the
        string spelled by the state.
    """

    __slots__ = ("patterns", "goto", "fail", "out", "_lengths")

    def __init__(self, patterns, goto, fail, out):
        self.patterns = patterns
        self.goto = goto
        self.fail = fail
        self.out = out
        self._lengths = tuple(len(p) for p in patterns)

    @property
    def state_count(self) -> int:
        return len(self.goto)

    def count_tokens(self, tokens: Sequence[str]) -> list[int]:
        """Count whole-token occurrences of every pattern in ``tokens``.

        Returns a list indexed by pattern id; entry p is the number of
        token positions at which pattern p occurs (i.e. tokens equal to it).
        """
        counts = [0] * len(self.patterns)
        goto = self.goto
        fail = self.fail
        out = self.out
        lengths = self._lengths
        for token in tokens:
            state = 0
            for ch in token:
                nxt = goto[state].get(ch)
                while nxt is None and state:
                    state = fail[state]
                    nxt = goto[state].get(ch)
                state = nxt if nxt is not None else 0
            if out[state]:
                n = len(token)
                for pid in out[state]:
                    if lengths[pid] == n:
                        counts[pid] += 1
        return counts


def build_automaton(patterns: Sequence[str]) -> Automaton:
    """Construct the automaton for a list of lemma patterns.

    Pattern ids are list positions; duplicates are allowed and end up in
    the same terminal state's output set. Empty pattern strings and empty
    pattern lists are rejected.
    """
    if not patterns:
        raise ValueError("pattern set must contain at least one pattern")
    for pid, pattern in enumerate(patterns):
        if not pattern:
            raise ValueError(f"pattern {pid} is an empty string")

    goto: list[dict[str, int]] = [{}]
    raw_out: list[list[int]] = [[]]
    for pid, pattern in enumerate(patterns):
        state = 0
        for ch in pattern:
            nxt = goto[state].get(ch)
            if nxt is None:
                nxt = len(goto)
                goto[state][ch] = nxt
                goto.append({})
                raw_out.append([])
            state = nxt
        raw_out[state].append(pid)

    # Failure links, breadth-first; outputs inherit from the failure target
    # so shorter patterns that are suffixes of longer ones are reported too.
    fail = [0] * len(goto)
    queue: deque[int] = deque()
    for child in goto[0].values():
        queue.append(child)
    while queue:
        state = queue.popleft()
        for ch, child in goto[state].items():
            fallback = fail[state]
            nxt = goto[fallback].get(ch)
            while nxt is None and fallback:
                fallback = fail[fallback]
                nxt = goto[fallback].get(ch)
            target = nxt if nxt is not None else 0
            fail[child] = target
            if raw_out[target]:
                raw_out[child].extend(raw_out[target])
            queue.append(child)

    return Automaton(
        patterns=tuple(patterns),
        goto=goto,
        fail=fail,
        out=[tuple(o) for o in raw_out],
    )


def count_occurrences(automaton: Automaton, sentence) -> list[int]:
    """Per-pattern whole-token occurrence counts for one sentence.

    ``sentence`` may be a ProcessedSentence or any sequence of tokens.
    """
    tokens = getattr(sentence, "lemmas", sentence)
    return automaton.count_tokens(tokens)
