"""Local wire API for synonym review sessions.

The service is a thin adapter over the dictionary operations: every mutation
goes through the same seed/suggest/apply functions the CLI uses, and both the
dictionary and the session state hit disk before a response is sent, so no
human decision can be lost to a crash.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .corpusio import atomic_write_text, read_jsonl
from .embedding import EmbeddingModel, load_model
from .normalize import NormalizedDocument
from .syndict import (
    Concept,
    SuggestionSession,
    SynonymDictionary,
    apply_decisions,
    run_round,
    start_session,
)

logger = logging.getLogger(__name__)

SNIPPET_RADIUS = 8  # tokens each side of a keyword-in-context hit


class ConceptOut(BaseModel):
    concept_id: str
    canonical: str
    accepted: list[str]
    rejected: list[str]
    has_session: bool


class CandidateOut(BaseModel):
    token: str
    similarity: float
    query_term: str
    snippets: list[str]


class RoundOut(BaseModel):
    iteration: int
    proposed: list[str]
    accepted: list[str]
    rejected: list[str]


class SessionOut(BaseModel):
    session_id: str
    concept_id: str
    iteration: int
    pending: list[CandidateOut]
    fixpoint: bool
    accepted: list[str]
    rejected: list[str]
    history: list[RoundOut]
    warnings: list[str] = Field(default_factory=list)


class SessionCreateIn(BaseModel):
    concept_id: str
    seeds: list[str] = Field(default_factory=list)


class DecisionsIn(BaseModel):
    accepts: list[str] = Field(default_factory=list)
    rejects: list[str] = Field(default_factory=list)


class ContextsOut(BaseModel):
    term: str
    snippets: list[str]


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


class KwicIndex:
    """Inverted token index over the reviewed corpus, precomputed at startup
    so snippet lookups stay interactive."""

    def __init__(self, docs: list[NormalizedDocument]):
        self._docs = {d.doc_id: d.tokens for d in docs}
        self._hits: dict[str, list[tuple[str, int]]] = {}
        for d in sorted(docs, key=lambda d: d.doc_id):
            for i, tok in enumerate(d.tokens):
                self._hits.setdefault(tok, []).append((d.doc_id, i))

    def snippets(self, term: str, limit: int) -> list[str]:
        out = []
        for doc_id, i in self._hits.get(term, [])[:limit]:
            toks = self._docs[doc_id]
            lo = max(0, i - SNIPPET_RADIUS)
            out.append(" ".join(toks[lo : i + SNIPPET_RADIUS + 1]))
        return out


class ReviewStore:
    """Dictionary plus session state persisted as human-diffable JSON files."""

    def __init__(self, store_dir: Path, concepts_path: Path | None):
        self.dir = Path(store_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "sessions").mkdir(exist_ok=True)
        dict_path = self.dir / "dictionary.json"
        if dict_path.exists():
            self.dictionary = SynonymDictionary.load(dict_path)
        else:
            self.dictionary = SynonymDictionary()
            if concepts_path is not None:
                data = json.loads(Path(concepts_path).read_text(encoding="utf-8"))
                for c in data["concepts"]:
                    self.dictionary.seed_concept(
                        Concept(c["concept_id"], c["canonical"]), c.get("seeds", [])
                    )
            self.save_dictionary()
        self.sessions: dict[str, SuggestionSession] = {}
        for fp in sorted((self.dir / "sessions").glob("*.json")):
            d = json.loads(fp.read_text(encoding="utf-8"))
            s = SuggestionSession(
                session_id=d["session_id"], concept_id=d["concept_id"],
                iteration=d["iteration"], frontier=list(d["frontier"]),
                fixpoint=d["fixpoint"],
            )
            self.sessions[s.session_id] = s

    def save_dictionary(self) -> None:
        self.dictionary.save(self.dir / "dictionary.json")

    def save_session(self, s: SuggestionSession) -> None:
        atomic_write_text(
            self.dir / "sessions" / f"{s.session_id}.json",
            json.dumps(
                {
                    "session_id": s.session_id,
                    "concept_id": s.concept_id,
                    "iteration": s.iteration,
                    "frontier": s.frontier,
                    "fixpoint": s.fixpoint,
                },
                ensure_ascii=False, indent=2, sort_keys=True,
            ) + "\n",
        )

    def session_for_concept(self, concept_id: str) -> SuggestionSession | None:
        for s in self.sessions.values():
            if s.concept_id == concept_id:
                return s
        return None


def create_app(
    store_dir: str | Path,
    model_path: str | Path,
    corpus_path: str | Path,
    concepts_path: str | Path | None = None,
    suggest_k: int = 20,
    snippet_limit: int = 3,
) -> FastAPI:
    """Wire the review endpoints over a trained model, a reviewed corpus and
    a dictionary store directory."""
    model: EmbeddingModel = load_model(model_path)
    docs = [NormalizedDocument.from_dict(d) for d in read_jsonl(corpus_path)]
    kwic = KwicIndex(docs)
    store = ReviewStore(Path(store_dir), Path(concepts_path) if concepts_path else None)
    lock = threading.Lock()
    app = FastAPI(title="textruct review service", version=__version__)

    def session_out(s: SuggestionSession, warnings: list[str] | None = None) -> SessionOut:
        entry = store.dictionary.entry(s.concept_id)
        return SessionOut(
            session_id=s.session_id,
            concept_id=s.concept_id,
            iteration=s.iteration,
            pending=[
                CandidateOut(
                    token=c.token, similarity=c.similarity, query_term=c.query_term,
                    snippets=kwic.snippets(c.token, snippet_limit),
                )
                for c in entry.pending
            ],
            fixpoint=s.fixpoint,
            accepted=sorted(entry.accepted),
            rejected=sorted(entry.rejected),
            history=[
                RoundOut(iteration=r.iteration, proposed=r.proposed,
                         accepted=r.accepted, rejected=r.rejected)
                for r in entry.history
            ],
            warnings=warnings or [],
        )

    @app.get("/v1/concepts", response_model=list[ConceptOut])
    def list_concepts():
        return [
            ConceptOut(
                concept_id=e.concept_id, canonical=e.canonical,
                accepted=sorted(e.accepted), rejected=sorted(e.rejected),
                has_session=store.session_for_concept(e.concept_id) is not None,
            )
            for _cid, e in sorted(store.dictionary.entries.items())
        ]

    @app.post("/v1/sessions", response_model=SessionOut, status_code=201)
    def create_session(body: SessionCreateIn):
        with lock:
            known = body.concept_id in store.dictionary.entries
            if not known and not body.seeds:
                raise _error(422, "unknown_concept",
                             f"concept {body.concept_id!r} is unknown and no seeds were given")
            if store.session_for_concept(body.concept_id) is not None:
                raise _error(409, "session_exists",
                             f"concept {body.concept_id!r} already has an active session")
            try:
                store.dictionary.seed_concept(
                    Concept(body.concept_id, body.concept_id), body.seeds
                )
            except ValueError as exc:
                raise _error(409, "seed_rejected", str(exc))
            session = start_session(store.dictionary, body.concept_id)
            run_round(session, store.dictionary, model, suggest_k)
            warnings = []
            if not any(t in model for t in session.frontier):
                warnings.append("no accepted term is in the model vocabulary")
            store.save_dictionary()
            store.save_session(session)
            store.sessions[session.session_id] = session
            return session_out(session, warnings)

    @app.get("/v1/sessions/{session_id}", response_model=SessionOut)
    def get_session(session_id: str):
        s = store.sessions.get(session_id)
        if s is None:
            raise _error(404, "session_not_found", f"no session {session_id!r}")
        return session_out(s)

    @app.post("/v1/sessions/{session_id}/decisions", response_model=SessionOut)
    def post_decisions(session_id: str, body: DecisionsIn):
        with lock:
            s = store.sessions.get(session_id)
            if s is None:
                raise _error(404, "session_not_found", f"no session {session_id!r}")
            try:
                apply_decisions(s, store.dictionary,
                                set(body.accepts), set(body.rejects))
            except ValueError as exc:
                raise _error(422, "invalid_decisions", str(exc))
            run_round(s, store.dictionary, model, suggest_k)
            store.save_dictionary()
            store.save_session(s)
            return session_out(s)

    @app.get("/v1/contexts", response_model=ContextsOut)
    def get_contexts(term: str, limit: int = 10):
        return ContextsOut(term=term, snippets=kwic.snippets(term, limit))

    return app
