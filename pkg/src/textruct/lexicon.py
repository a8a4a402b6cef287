"""Corpus statistics, frequency-based typo correction and phrase merging.

A typo shows up as a rare token close in edit distance to a frequent one; a
phrase shows up as a word pair whose discounted co-occurrence score clears a
threshold. Both operate on normalized token streams and rewrite the corpus.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, replace

from .normalize import DATE_PLACEHOLDER, NormalizedDocument

_NUMBER_RE = re.compile(r"^\d+(?:[.,]\d+)?$")


def is_countable_word(token: str) -> bool:
    """Date placeholders and pure numbers never take part in typo correction
    or phrase merging."""
    return token != DATE_PLACEHOLDER and not _NUMBER_RE.match(token)


@dataclass
class CorpusStats:
    unigram_counts: Counter
    bigram_counts: Counter
    total_tokens: int


@dataclass
class TypoConfig:
    """Thresholds for the rare-word correction rule."""

    rare_max: int = 10        # a candidate typo occurs fewer times than this
    frequent_min: int = 100   # a replacement occurs at least this often
    min_length: int = 4       # shorter rare words are left alone (anagram risk)
    ratio_threshold: float = 0.25  # max edit_distance / len(rare_word)

    def __post_init__(self):
        if self.rare_max >= self.frequent_min:
            raise ValueError("rare_max must be below frequent_min")
        if self.min_length < 1:
            raise ValueError("min_length must be >= 1")
        if not (0 < self.ratio_threshold < 1):
            raise ValueError("ratio_threshold must be in (0, 1)")


@dataclass
class PhraseConfig:
    """Discounted co-occurrence scoring for two merge passes."""

    delta: float = 50.0
    threshold_pass1: float = 100.0
    threshold_pass2: float = 50.0
    scale_by_total: bool = True  # multiply the score by the corpus size N

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.threshold_pass1 <= 0 or self.threshold_pass2 <= 0:
            raise ValueError("thresholds must be > 0")


def compute_stats(docs: list[NormalizedDocument]) -> CorpusStats:
    """Exact unigram and adjacent-bigram counts. Bigrams never cross document
    boundaries."""
    unigrams: Counter = Counter()
    bigrams: Counter = Counter()
    total = 0
    for doc in docs:
        toks = doc.tokens
        unigrams.update(toks)
        total += len(toks)
        bigrams.update(zip(toks, toks[1:]))
    return CorpusStats(unigram_counts=unigrams, bigram_counts=bigrams, total_tokens=total)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance: minimum insertions, deletions or substitutions."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _bounded_edit_distance(a: str, b: str, limit: int) -> int:
    """Levenshtein with early exit: returns limit + 1 as soon as the distance
    is known to exceed limit."""
    if abs(len(a) - len(b)) > limit:
        return limit + 1
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        row_min = i
        for j, cb in enumerate(b, start=1):
            v = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
            cur.append(v)
            row_min = min(row_min, v)
        if row_min > limit:
            return limit + 1
        prev = cur
    return prev[-1] if prev[-1] <= limit else limit + 1


@dataclass
class Substitution:
    rare_word: str
    replacement: str
    distance: int
    ratio: float


def find_typo_substitutions(
    present_tokens: set[str], stats: CorpusStats, cfg: TypoConfig
) -> list[Substitution]:
    """Resolve each rare-enough token present in the corpus against the
    frequent vocabulary. Candidates tie-break on (distance, higher frequency,
    lexicographic)."""
    counts = stats.unigram_counts
    frequent = sorted(
        t for t, c in counts.items() if c >= cfg.frequent_min and is_countable_word(t)
    )
    by_length: dict[int, list[str]] = {}
    for t in frequent:
        by_length.setdefault(len(t), []).append(t)

    subs: list[Substitution] = []
    for rare in sorted(present_tokens):
        if not is_countable_word(rare):
            continue
        if len(rare) < cfg.min_length:
            continue
        if counts.get(rare, 0) >= cfg.rare_max:
            continue
        limit = math.floor(cfg.ratio_threshold * len(rare) + 1e-9)
        if limit < 1:
            continue
        best: tuple[int, int, str] | None = None  # (distance, -count, token)
        for length in range(len(rare) - limit, len(rare) + limit + 1):
            for cand in by_length.get(length, ()):
                if cand == rare:
                    continue
                d = _bounded_edit_distance(rare, cand, limit)
                if d > limit:
                    continue
                key = (d, -counts[cand], cand)
                if best is None or key < best:
                    best = key
        if best is not None:
            d = best[0]
            subs.append(
                Substitution(
                    rare_word=rare,
                    replacement=best[2],
                    distance=d,
                    ratio=d / len(rare),
                )
            )
    return subs


def correct_typos(
    docs: list[NormalizedDocument],
    stats: CorpusStats,
    cfg: TypoConfig | None = None,
    iterate: bool = False,
) -> tuple[list[NormalizedDocument], list[Substitution]]:
    """Rewrite every qualifying rare token to its frequent neighbor,
    corpus-wide. Only tokens actually present in the documents are
    considered, so re-running on the output (same stats) is a no-op.

    With iterate=True the stats are recomputed and the pass repeated until no
    substitution fires (words promoted over the frequency bar by earlier
    rounds can then absorb further typos).
    """
    cfg = cfg or TypoConfig()
    all_subs: list[Substitution] = []
    current = list(docs)
    current_stats = stats
    for _round in range(10):
        present = {t for doc in current for t in doc.tokens}
        subs = find_typo_substitutions(present, current_stats, cfg)
        if not subs:
            break
        mapping = {s.rare_word: s.replacement for s in subs}
        current = [
            replace(doc, tokens=[mapping.get(t, t) for t in doc.tokens])
            for doc in current
        ]
        all_subs.extend(subs)
        if not iterate:
            break
        current_stats = compute_stats(current)
    return current, all_subs


@dataclass
class PhraseMerge:
    phrase: str
    score: float
    pass_number: int


def phrase_score(
    pair: tuple[str, str], stats: CorpusStats, cfg: PhraseConfig
) -> float:
    """(count(a,b) - delta) / (count(a) * count(b)), optionally scaled by the
    corpus size so the shipped thresholds are reachable."""
    ca = stats.unigram_counts.get(pair[0], 0)
    cb = stats.unigram_counts.get(pair[1], 0)
    if ca == 0 or cb == 0:
        return float("-inf")
    score = (stats.bigram_counts.get(pair, 0) - cfg.delta) / (ca * cb)
    if cfg.scale_by_total:
        score *= stats.total_tokens
    return score


def _word_arity(token: str) -> int:
    return token.count("_") + 1


def _merge_pass(
    docs: list[NormalizedDocument],
    stats: CorpusStats,
    cfg: PhraseConfig,
    threshold: float,
    pass_number: int,
) -> tuple[list[NormalizedDocument], list[PhraseMerge]]:
    merges: dict[tuple[str, str], float] = {}
    for pair in stats.bigram_counts:
        a, b = pair
        if not (is_countable_word(a) and is_countable_word(b)):
            continue
        if _word_arity(a) + _word_arity(b) > 3:  # phrases stop at trigrams
            continue
        score = phrase_score(pair, stats, cfg)
        if score > threshold:
            merges[pair] = score
    if not merges:
        return list(docs), []
    out_docs = []
    for doc in docs:
        toks = doc.tokens
        merged: list[str] = []
        i = 0
        while i < len(toks):
            if i + 1 < len(toks) and (toks[i], toks[i + 1]) in merges:
                merged.append(toks[i] + "_" + toks[i + 1])
                i += 2
            else:
                merged.append(toks[i])
                i += 1
        out_docs.append(replace(doc, tokens=merged))
    merge_list = [
        PhraseMerge(phrase=a + "_" + b, score=s, pass_number=pass_number)
        for (a, b), s in sorted(merges.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
    return out_docs, merge_list


def detect_phrases(
    docs: list[NormalizedDocument],
    stats: CorpusStats | None = None,
    cfg: PhraseConfig | None = None,
    passes: int = 2,
) -> tuple[list[NormalizedDocument], list[PhraseMerge]]:
    """Greedy left-to-right merge of scoring word pairs; the second pass runs
    on recomputed stats, so bigram tokens count as ordinary words and
    trigrams can form."""
    cfg = cfg or PhraseConfig()
    if passes not in (1, 2):
        raise ValueError("passes must be 1 or 2")
    all_merges: list[PhraseMerge] = []
    current = list(docs)
    for p in range(1, passes + 1):
        pass_stats = stats if (p == 1 and stats is not None) else compute_stats(current)
        threshold = cfg.threshold_pass1 if p == 1 else cfg.threshold_pass2
        current, merges = _merge_pass(current, pass_stats, cfg, threshold, p)
        all_merges.extend(merges)
    return current, all_merges


def substitutions_tsv(subs: list[Substitution]) -> str:
    lines = ["rare_word\treplacement\tdistance\tratio"]
    for s in subs:
        lines.append(f"{s.rare_word}\t{s.replacement}\t{s.distance}\t{s.ratio:.4f}")
    return "\n".join(lines) + "\n"


def phrases_tsv(merges: list[PhraseMerge]) -> str:
    lines = ["phrase\tscore\tpass"]
    for m in merges:
        lines.append(f"{m.phrase}\t{m.score:.4f}\t{m.pass_number}")
    return "\n".join(lines) + "\n"
