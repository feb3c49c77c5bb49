"""Retrieval evaluation: precision, recall and F1 at a cutoff, macro-averaged.

These are retrieval metrics over ranked paragraph ids. They are not
end-to-end answer accuracy; no generation step exists in this package.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, EmptyQuery, EmptyRelevantSet, MissingJudgment
from .index import IndexSnapshot
from .retrieval import RankedList, ScoredHit, Scorer, candidates, resolve_scorer, search
from .scoring import Bm25Params, CompositeWeights

Qrels = Mapping[str, frozenset[str]]

BASELINE = "baseline"
# Row order of the four-way comparison: naive baseline, BM25, TF-IDF, composite.
COMPARISON_ORDER = (BASELINE, "bm25", "tfidf", "composite")
REPORT_FIELDS = ("scorer", "k", "precision", "recall", "f1", "n_queries")
REPORT_NOTE = (
    "retrieval metrics (macro P/R/F1 at k); not end-to-end QA accuracy"
)


@dataclass(frozen=True)
class EvalResult:
    scorer_name: str
    k: int
    precision: float
    recall: float
    f1: float
    n_queries: int
    n_empty: int = 0

    def row(self) -> dict:
        return {
            "scorer": self.scorer_name,
            "k": self.k,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "n_queries": self.n_queries,
        }


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    if precision == recall:
        return precision
    return 2 * precision * recall / (precision + recall)


def precision_recall_f1(
    retrieved: Sequence[str], relevant: Iterable[str]
) -> tuple[float, float, float]:
    relevant = set(relevant)
    if not relevant:
        raise EmptyRelevantSet("relevant set is empty")
    got = list(dict.fromkeys(retrieved))
    if not got:
        return 0.0, 0.0, 0.0
    hit = sum(1 for r in got if r in relevant)
    p = hit / len(got)
    r = hit / len(relevant)
    return p, r, f1_score(p, r)


def baseline_search(snapshot: IndexSnapshot, raw_query: str, k: int = 5) -> RankedList:
    """Naive baseline: matching documents in index order, unscored, first k."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    terms = snapshot.analyze(raw_query)
    if not terms:
        raise EmptyQuery(f"query {raw_query!r} has no searchable terms")
    ids = sorted(candidates(snapshot, terms))[:k]
    docs = snapshot.docs
    return RankedList(tuple(ScoredHit(d, docs[d].external_id, 0.0) for d in ids), k)


def run_query(
    snapshot: IndexSnapshot,
    raw_query: str,
    scorer: str | Scorer,
    k: int,
    bm25: Bm25Params = Bm25Params(),
    composite: CompositeWeights | None = None,
) -> RankedList:
    if scorer == BASELINE:
        return baseline_search(snapshot, raw_query, k)
    return search(snapshot, raw_query, resolve_scorer(scorer, composite), k, bm25)


def macro_average(per_query: Sequence[tuple[float, float, float]]) -> tuple[float, float, float]:
    n = len(per_query)
    return tuple(math.fsum(m[i] for m in per_query) / n for i in range(3))  # type: ignore[return-value]


def evaluate_run(
    snapshot: IndexSnapshot,
    queries: Sequence[tuple[str, str]],
    qrels: Qrels,
    scorer: str | Scorer = "bm25",
    k: int = 5,
    bm25: Bm25Params = Bm25Params(),
    composite: CompositeWeights | None = None,
    scorer_name: str | None = None,
) -> EvalResult:
    """Evaluate one scorer over ``(query_id, text)`` pairs.

    Queries that analyze to nothing count as (0, 0, 0) and are tallied in
    ``n_empty``.
    """
    if not queries:
        raise DomainError("no queries to evaluate")
    for qid, _ in queries:
        if qid not in qrels:
            raise MissingJudgment(f"no relevance judgments for query {qid!r}")
    per_query: dict[str, tuple[float, float, float]] = {}
    n_empty = 0
    for qid, text in queries:
        try:
            ranked = run_query(snapshot, text, scorer, k, bm25, composite)
        except EmptyQuery:
            n_empty += 1
            per_query[qid] = (0.0, 0.0, 0.0)
            continue
        per_query[qid] = precision_recall_f1(ranked.external_ids, qrels[qid])
    p, r, f = macro_average([per_query[q] for q in sorted(per_query)])
    if scorer_name is None:
        scorer_name = scorer if isinstance(scorer, str) else _scorer_label(scorer)
    return EvalResult(scorer_name, k, p, r, f, len(per_query), n_empty)


def _scorer_label(scorer: Scorer) -> str:
    if isinstance(scorer, CompositeWeights):
        return "composite"
    return {"cosine_tfidf": "tfidf"}.get(scorer.value, scorer.value)


def compare_scorers(
    snapshot: IndexSnapshot,
    queries: Sequence[tuple[str, str]],
    qrels: Qrels,
    scorers: Iterable[str] = COMPARISON_ORDER,
    k: int = 5,
    bm25: Bm25Params = Bm25Params(),
    composite: CompositeWeights | None = None,
) -> list[EvalResult]:
    """One EvalResult per scorer, rows in baseline/bm25/tfidf/composite order."""
    names = [s.strip().lower() for s in scorers]
    names = [("tfidf" if n in ("cosine", "cosine_tfidf") else n) for n in names]
    rank = {n: i for i, n in enumerate(COMPARISON_ORDER)}
    ordered = sorted(dict.fromkeys(names), key=lambda n: rank.get(n, len(rank)))
    return [
        evaluate_run(snapshot, queries, qrels, n, k, bm25, composite, scorer_name=n)
        for n in ordered
    ]


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def emit_report(results: Sequence[EvalResult], format: str = "table") -> str:
    """Render results in input order as ``table``, ``csv`` or ``json``."""
    if not results:
        raise DomainError("nothing to report")
    rows = [r.row() for r in results]
    if format == "json":
        return json.dumps(rows, indent=2) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()
    if format == "table":
        cells = [list(REPORT_FIELDS)] + [
            [row["scorer"], str(row["k"])]
            + [f"{row[m]:.4f}" for m in ("precision", "recall", "f1")]
            + [str(row["n_queries"])]
            for row in rows
        ]
        widths = [max(len(c[i]) for c in cells) for i in range(len(REPORT_FIELDS))]
        lines = [f"# {REPORT_NOTE}"]
        for i, c in enumerate(cells):
            lines.append("  ".join(v.ljust(w) if j == 0 else v.rjust(w)
                                   for j, (v, w) in enumerate(zip(c, widths))).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"
    raise DomainError(f"unknown report format {format!r}")

