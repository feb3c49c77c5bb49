"""Query execution: analyze, gather candidates from postings, score, take the top k."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

from .errors import DomainError, EmptyQuery
from .index import IndexSnapshot
from .scoring import (
    Bm25Params,
    CompositeWeights,
    MetricId,
    bm25_score,
    composite_scores,
    cosine_score,
    query_vector,
)

Scorer = Union[MetricId, CompositeWeights]

SCORER_ALIASES = {
    "bm25": MetricId.BM25,
    "tfidf": MetricId.COSINE_TFIDF,
    "cosine": MetricId.COSINE_TFIDF,
    "cosine_tfidf": MetricId.COSINE_TFIDF,
}


def resolve_scorer(name: str | Scorer, composite: CompositeWeights | None = None) -> Scorer:
    """Map a CLI/HTTP scorer name to a scorer. ``composite`` uses the given weights."""
    if isinstance(name, (MetricId, CompositeWeights)):
        return name
    key = name.strip().lower()
    if key == "composite":
        return composite or CompositeWeights()
    try:
        return SCORER_ALIASES[key]
    except KeyError:
        raise DomainError(f"unknown scorer {name!r}") from None


@dataclass(frozen=True)
class Query:
    raw: str
    terms: tuple[str, ...]
    query_id: str | None = None

    @classmethod
    def parse(cls, snapshot: IndexSnapshot, raw: str, query_id: str | None = None) -> Query:
        return cls(raw, tuple(snapshot.analyze(raw)), query_id)


@dataclass(frozen=True)
class ScoredHit:
    doc_id: int
    external_id: str
    score: float


@dataclass(frozen=True)
class RankedList:
    hits: tuple[ScoredHit, ...]
    top_k_count: int

    def __iter__(self) -> Iterator[ScoredHit]:
        return iter(self.hits)

    def __len__(self) -> int:
        return len(self.hits)

    def __getitem__(self, i):
        return self.hits[i]

    @property
    def doc_ids(self) -> list[int]:
        return [h.doc_id for h in self.hits]

    @property
    def external_ids(self) -> list[str]:
        return [h.external_id for h in self.hits]


def _rank_key(hit: ScoredHit):
    return (-hit.score, hit.doc_id)


def candidates(snapshot: IndexSnapshot, terms: Iterable[str]) -> set[int]:
    """Documents containing at least one of ``terms``."""
    out: set[int] = set()
    for term in set(terms):
        out.update(p.doc_id for p in snapshot.postings_for(term))
    return out


def top_k(scored: Iterable[ScoredHit], k: int) -> RankedList:
    """Highest scores first, ties broken by ascending doc_id."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    return RankedList(tuple(heapq.nsmallest(k, scored, key=_rank_key)), k)


def score_documents(
    snapshot: IndexSnapshot,
    terms: Sequence[str],
    doc_ids: Sequence[int],
    scorer: Scorer,
    bm25: Bm25Params = Bm25Params(),
) -> list[float]:
    """Score ``doc_ids`` for analyzed query ``terms``."""
    if isinstance(scorer, CompositeWeights):
        columns = {m: score_documents(snapshot, terms, doc_ids, m, bm25) for m in scorer.metrics}
        rows = [{m: columns[m][i] for m in scorer.metrics} for i in range(len(doc_ids))]
        return composite_scores(rows, scorer)
    if scorer is MetricId.BM25:
        return [bm25_score(snapshot, terms, d, bm25) for d in doc_ids]
    if scorer is MetricId.COSINE_TFIDF:
        qvec = query_vector(snapshot, terms)
        return [cosine_score(snapshot, terms, d, qvec) for d in doc_ids]
    raise DomainError(f"unsupported scorer {scorer!r}")


def search(
    snapshot: IndexSnapshot,
    raw_query: str,
    scorer: str | Scorer = MetricId.BM25,
    k: int = 5,
    bm25: Bm25Params = Bm25Params(),
) -> RankedList:
    """Run one query end to end.

    Only documents sharing a term with the query are scored; every other
    document scores exactly 0 under all scorers. Hits with score 0 are not
    returned.

    Raises:
        EmptyQuery: the query has no terms left after analysis.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    scorer = resolve_scorer(scorer)
    terms = snapshot.analyze(raw_query)
    if not terms:
        raise EmptyQuery(f"query {raw_query!r} has no searchable terms")
    cands = sorted(candidates(snapshot, terms))
    scores = score_documents(snapshot, terms, cands, scorer, bm25)
    docs = snapshot.docs
    hits = (
        ScoredHit(d, docs[d].external_id, s) for d, s in zip(cands, scores) if s > 0.0
    )
    return top_k(hits, k)
