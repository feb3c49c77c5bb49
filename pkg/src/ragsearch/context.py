"""Pack ranked passages into a token-budgeted context block for a downstream LLM.

Token cost of a passage is its analyzed term count plus a fixed separator
overhead. Passages are taken whole, in rank order, stopping at the first
one that does not fit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .index import IndexSnapshot
from .retrieval import RankedList

SEPARATOR_TOKENS = 8


@dataclass(frozen=True)
class Passage:
    external_id: str
    title: str
    body: str
    score: float


@dataclass(frozen=True)
class ContextBundle:
    query: str
    passages: tuple[Passage, ...]
    rendered: str
    token_budget: int
    tokens_used: int

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "passages": [
                {"external_id": p.external_id, "title": p.title, "body": p.body, "score": p.score}
                for p in self.passages
            ],
            "rendered": self.rendered,
            "token_budget": self.token_budget,
            "tokens_used": self.tokens_used,
        }


def passage_cost(snapshot: IndexSnapshot, body: str) -> int:
    return len(snapshot.analyze(body)) + SEPARATOR_TOKENS


def render_passage(rank: int, title: str, body: str) -> str:
    return f"[{rank}] {title}\n{body}\n\n"


def assemble_context(
    hits: RankedList, snapshot: IndexSnapshot, token_budget: int, query: str = ""
) -> ContextBundle:
    if token_budget < 1:
        raise DomainError(f"token_budget must be >= 1, got {token_budget}")
    passages = []
    parts = []
    used = 0
    for rank, hit in enumerate(hits, start=1):
        doc = snapshot.doc(hit.doc_id)
        cost = passage_cost(snapshot, doc.body)
        if used + cost > token_budget:
            break
        used += cost
        passages.append(Passage(doc.external_id, doc.title, doc.body, hit.score))
        parts.append(render_passage(rank, doc.title, doc.body))
    return ContextBundle(query, tuple(passages), "".join(parts), token_budget, used)
