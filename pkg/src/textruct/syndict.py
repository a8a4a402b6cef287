"""Concept dictionaries and the iterative suggest / validate / augment loop.

Every concept keeps an accepted set (seeded by domain experts, grown by
validated suggestions), a rejected set (so a bad candidate never resurfaces)
and an append-only history of review rounds, which makes a session auditable
and replayable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .corpusio import atomic_write_text
from .embedding import EmbeddingModel, nearest_neighbors

logger = logging.getLogger(__name__)


@dataclass
class Concept:
    concept_id: str
    canonical: str


@dataclass
class Candidate:
    token: str
    similarity: float
    query_term: str


@dataclass
class ReviewRound:
    iteration: int
    proposed: list[str]
    accepted: list[str]
    rejected: list[str]


@dataclass
class ConceptEntry:
    concept_id: str
    canonical: str
    seeds: set[str] = field(default_factory=set)
    accepted: set[str] = field(default_factory=set)
    rejected: set[str] = field(default_factory=set)
    pending: list[Candidate] = field(default_factory=list)
    history: list[ReviewRound] = field(default_factory=list)

    def check(self) -> None:
        if self.canonical not in self.accepted:
            raise ValueError(f"{self.concept_id}: canonical must be accepted")
        overlap = self.accepted & self.rejected
        if overlap:
            raise ValueError(f"{self.concept_id}: accepted/rejected overlap {sorted(overlap)}")
        pend = {c.token for c in self.pending}
        bad = pend & (self.accepted | self.rejected)
        if bad:
            raise ValueError(f"{self.concept_id}: pending tokens already decided {sorted(bad)}")


class SynonymDictionary:
    """Per-concept surface-form store with validation and canonical rewrite."""

    def __init__(self) -> None:
        self.entries: dict[str, ConceptEntry] = {}

    def entry(self, concept_id: str) -> ConceptEntry:
        if concept_id not in self.entries:
            raise KeyError(f"unknown concept {concept_id!r}")
        return self.entries[concept_id]

    def seed_concept(
        self, concept: Concept, seeds: list[str] | None = None
    ) -> ConceptEntry:
        """Create or extend a concept with an expert-provided seed list. A
        seed that was explicitly rejected earlier is a human contradiction
        and must be raised, not silently resolved."""
        seeds = seeds or []
        entry = self.entries.get(concept.concept_id)
        if entry is None:
            entry = ConceptEntry(concept_id=concept.concept_id, canonical=concept.canonical)
            self.entries[concept.concept_id] = entry
        contradicted = set(seeds) & entry.rejected
        if contradicted:
            raise ValueError(
                f"seeds already rejected for {concept.concept_id}: {sorted(contradicted)}"
            )
        entry.seeds |= set(seeds)
        entry.accepted |= {entry.canonical, *seeds}
        entry.check()
        return entry

    def validate(self) -> None:
        owner: dict[str, str] = {}
        for entry in self.entries.values():
            entry.check()
            for surface in entry.accepted:
                if surface in owner and owner[surface] != entry.concept_id:
                    raise ValueError(
                        f"surface {surface!r} accepted under both "
                        f"{owner[surface]!r} and {entry.concept_id!r}"
                    )
                owner[surface] = entry.concept_id

    def canonical_map(self) -> dict[str, str]:
        self.validate()
        return {
            surface: entry.canonical
            for entry in self.entries.values()
            for surface in entry.accepted
        }

    def seeds_only(self) -> "SynonymDictionary":
        """Copy with accepted sets shrunk back to canonical + initial seeds;
        used for the no-augmentation comparison run."""
        out = SynonymDictionary()
        for entry in self.entries.values():
            out.entries[entry.concept_id] = ConceptEntry(
                concept_id=entry.concept_id,
                canonical=entry.canonical,
                seeds=set(entry.seeds),
                accepted={entry.canonical, *entry.seeds},
            )
        return out

    def to_dict(self) -> dict:
        return {
            "concepts": [
                {
                    "concept_id": e.concept_id,
                    "canonical": e.canonical,
                    "seeds": sorted(e.seeds),
                    "accepted": sorted(e.accepted),
                    "rejected": sorted(e.rejected),
                    "pending": [
                        {"token": c.token, "similarity": c.similarity,
                         "query_term": c.query_term}
                        for c in e.pending
                    ],
                    "history": [
                        {"iteration": r.iteration, "proposed": r.proposed,
                         "accepted": r.accepted, "rejected": r.rejected}
                        for r in e.history
                    ],
                }
                for _cid, e in sorted(self.entries.items())
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynonymDictionary":
        out = cls()
        for c in d.get("concepts", []):
            out.entries[c["concept_id"]] = ConceptEntry(
                concept_id=c["concept_id"],
                canonical=c["canonical"],
                seeds=set(c.get("seeds", [])),
                accepted=set(c.get("accepted", [])),
                rejected=set(c.get("rejected", [])),
                pending=[
                    Candidate(p["token"], p["similarity"], p["query_term"])
                    for p in c.get("pending", [])
                ],
                history=[
                    ReviewRound(r["iteration"], list(r["proposed"]),
                                list(r["accepted"]), list(r["rejected"]))
                    for r in c.get("history", [])
                ],
            )
        return out

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(), ensure_ascii=False,
                                           indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SynonymDictionary":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class SuggestionSession:
    session_id: str
    concept_id: str
    iteration: int = 0
    frontier: list[str] = field(default_factory=list)
    fixpoint: bool = False


def start_session(dictionary: SynonymDictionary, concept_id: str) -> SuggestionSession:
    entry = dictionary.entry(concept_id)
    return SuggestionSession(
        session_id=f"sess-{concept_id}",
        concept_id=concept_id,
        iteration=0,
        frontier=sorted(entry.accepted),
    )


def suggest(
    session: SuggestionSession,
    model: EmbeddingModel,
    dictionary: SynonymDictionary,
    k: int = 20,
) -> list[Candidate]:
    """Union of the top-k neighbors of every frontier term, minus everything
    already decided, ranked by best similarity."""
    entry = dictionary.entry(session.concept_id)
    decided = entry.accepted | entry.rejected
    best: dict[str, Candidate] = {}
    in_vocab = 0
    for term in sorted(session.frontier):
        if term not in model:
            continue
        in_vocab += 1
        for token, sim in nearest_neighbors(model, term, k):
            if token in decided:
                continue
            cur = best.get(token)
            if cur is None or sim > cur.similarity:
                best[token] = Candidate(token=token, similarity=sim, query_term=term)
    if session.frontier and in_vocab == 0:
        logger.warning(
            "no frontier term of %s is in the model vocabulary", session.concept_id
        )
    return sorted(best.values(), key=lambda c: (-c.similarity, c.token))


def run_round(
    session: SuggestionSession,
    dictionary: SynonymDictionary,
    model: EmbeddingModel,
    k: int = 20,
) -> list[Candidate]:
    """Compute one suggestion round and stage it as the pending list. An
    empty round marks the session as a fixpoint."""
    candidates = suggest(session, model, dictionary, k)
    dictionary.entry(session.concept_id).pending = candidates
    session.fixpoint = not candidates
    return candidates


def apply_decisions(
    session: SuggestionSession,
    dictionary: SynonymDictionary,
    accepts: set[str],
    rejects: set[str],
) -> None:
    """Fold validated decisions back into the dictionary: accepted terms
    become the next query frontier, everything decided leaves pending."""
    entry = dictionary.entry(session.concept_id)
    pending_tokens = {c.token for c in entry.pending}
    if accepts & rejects:
        raise ValueError(f"tokens both accepted and rejected: {sorted(accepts & rejects)}")
    stray = (accepts | rejects) - pending_tokens
    if stray:
        raise ValueError(f"decision on non-pending tokens: {sorted(stray)}")
    entry.accepted |= accepts
    entry.rejected |= rejects
    entry.history.append(
        ReviewRound(
            iteration=session.iteration,
            proposed=sorted(pending_tokens),
            accepted=sorted(accepts),
            rejected=sorted(rejects),
        )
    )
    entry.pending = []
    entry.check()
    session.frontier = sorted(accepts)
    session.iteration += 1


def replay_entry(entry: ConceptEntry) -> tuple[set[str], set[str]]:
    """Rebuild the accepted/rejected sets from seeds plus the recorded
    rounds; equality with the live sets proves the history is complete."""
    accepted = {entry.canonical, *entry.seeds}
    rejected: set[str] = set()
    for r in entry.history:
        accepted |= set(r.accepted)
        rejected |= set(r.rejected)
    return accepted, rejected


def canonicalize(tokens: list[str], dictionary: SynonymDictionary) -> list[str]:
    """Rewrite every accepted surface form to its concept's canonical token.

    Surface forms may be merged-phrase tokens ("a_b") or multi-token spans
    that phrase merging did not join; spans match longest-first. Matching is
    exact at the token level, so "partial_mastectomy" is never rewritten by a
    plain "mastectomy" entry.
    """
    mapping = dictionary.canonical_map()
    if not mapping:
        return list(tokens)
    max_span = max(s.count("_") + 1 for s in mapping)
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        matched = False
        for span in range(min(max_span, n - i), 0, -1):
            surface = "_".join(tokens[i : i + span]) if span > 1 else tokens[i]
            target = mapping.get(surface)
            if target is not None:
                out.append(target)
                i += span
                matched = True
                break
        if not matched:
            out.append(tokens[i])
            i += 1
    return out
