"""Search-snippet HTTP service: boolean retrieval plus constrained compression.

A sentence is relevant iff it contains every query term (boolean AND).
Each hit is compressed so the result includes the query tokens and fits
the requested character budget; snippets are returned shortest source
sentence first.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from qcomp.corpus import Instance, ParseGraph, char_length, linearize


@dataclass
class InvertedIndex:
    """Case-folded token -> sorted sentence ids, plus the sentence store."""

    postings: dict[str, list[str]]
    store: dict[str, ParseGraph]

    def lookup(self, term: str) -> list[str]:
        return self.postings.get(term.lower(), [])


def index_corpus(graphs: Sequence[ParseGraph]) -> InvertedIndex:
    postings: dict[str, set[str]] = {}
    store: dict[str, ParseGraph] = {}
    for g in graphs:
        if g.id in store:
            raise ValueError("duplicate sentence id %r" % g.id)
        store[g.id] = g
        for tok in g.tokens:
            postings.setdefault(tok.form.lower(), set()).add(g.id)
    return InvertedIndex(
        postings={term: sorted(ids) for term, ids in postings.items()},
        store=store)


@dataclass(frozen=True)
class Snippet:
    sentence_id: str
    text: str
    char_len: int
    engine: str
    latency_ms: float

    def to_dict(self) -> dict:
        return {"sentence_id": self.sentence_id, "text": self.text,
                "char_len": self.char_len, "engine": self.engine,
                "latency_ms": self.latency_ms}


@dataclass
class SearchResult:
    snippets: list[Snippet]
    skipped: list[dict] = field(default_factory=list)


def _query_positions(g: ParseGraph, terms: Sequence[str]) -> Optional[frozenset[int]]:
    """First occurrence of each term, case-folded; None when a term is missing."""
    positions = set()
    for term in terms:
        folded = term.lower()
        pos = next((t.position for t in g.tokens if t.form.lower() == folded), None)
        if pos is None:
            return None
        positions.add(pos)
    return frozenset(positions)


def search(index: InvertedIndex, query_terms: Sequence[str], b: int, k: int,
           system) -> SearchResult:
    """Up to k constrained snippets for a boolean-AND query.

    Hits are compressed shortest-source-first; sentences whose query
    tokens alone exceed the budget are skipped with a reason.  Every
    returned snippet is re-validated at this boundary: it must fit b and
    contain every term.
    """
    if k < 1 or b < 1:
        raise ValueError("k and b must be >= 1")
    terms = [t for t in query_terms if t]
    if not terms:
        return SearchResult(snippets=[])
    ids = set(index.lookup(terms[0]))
    for term in terms[1:]:
        ids &= set(index.lookup(term))
    candidates = sorted(ids, key=lambda sid: (char_length(index.store[sid],
                                                          index.store[sid].positions), sid))
    result = SearchResult(snippets=[])
    for sid in candidates:
        if len(result.snippets) >= k:
            break
        g = index.store[sid]
        query = _query_positions(g, terms)
        if query is None:  # pragma: no cover - postings guarantee presence
            continue
        if char_length(g, query) > b:
            result.skipped.append(
                {"sentence_id": sid,
                 "reason": "query tokens need %d chars, budget %d" % (char_length(g, query), b)})
            continue
        inst = Instance(graph=g, query=query, budget_chars=b)
        t0 = time.perf_counter()
        kept = system.compress(inst)
        latency_ms = (time.perf_counter() - t0) * 1e3
        text, length = linearize(g, kept)
        snippet = Snippet(sentence_id=sid, text=text, char_len=length,
                          engine=system.name, latency_ms=latency_ms)
        _validate_snippet(snippet, terms, b)
        result.snippets.append(snippet)
    return result


def _validate_snippet(snippet: Snippet, terms: Sequence[str], b: int) -> None:
    if snippet.char_len > b:
        raise AssertionError("snippet for %s exceeds budget" % snippet.sentence_id)
    folded = snippet.text.lower().split(" ")
    for term in terms:
        if term.lower() not in folded:
            raise AssertionError("snippet for %s dropped query term %r"
                                 % (snippet.sentence_id, term))


# ---------------------------------------------------------------------------
# HTTP layer

def create_app(index: InvertedIndex, systems: dict, ui_dir: Optional[str] = None):
    """FastAPI app over an index and a registry of named compression systems.

    ui_dir, when given, is mounted at / so the bundled web UI is served
    same-origin with the JSON API.
    """
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    app = FastAPI(title="qcomp snippet service")

    @app.get("/healthz")
    def healthz():
        return JSONResponse({"status": "ok", "sentences": len(index.store)})

    @app.get("/engines")
    def engines():
        return JSONResponse({"engines": sorted(systems)})

    @app.get("/search")
    def search_endpoint(q: str, b: int = 75, k: int = 3, engine: str = "vertex_lr"):
        if engine not in systems:
            raise HTTPException(status_code=400,
                                detail="unknown engine %r; available: %s"
                                       % (engine, ", ".join(sorted(systems))))
        if b < 1 or k < 1:
            raise HTTPException(status_code=400, detail="b and k must be >= 1")
        t0 = time.perf_counter()
        result = search(index, q.split(), b=b, k=k, system=systems[engine])
        total_ms = (time.perf_counter() - t0) * 1e3
        return JSONResponse({
            "query": q,
            "budget": b,
            "engine": engine,
            "snippets": [s.to_dict() for s in result.snippets],
            "skipped": result.skipped,
            "total_ms": total_ms,
        })

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
