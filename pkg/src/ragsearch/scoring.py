"""Relevance scoring: IDF, TF-IDF vectors, cosine similarity, BM25, weighted composites.

All sums go through :func:`math.fsum`, so a score does not depend on the
order terms are visited in. The indexed search path and a plain
per-document call therefore agree bit for bit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, MissingMetric
from .index import IndexSnapshot

SparseVector = dict[str, float]


class MetricId(str, Enum):
    COSINE_TFIDF = "cosine_tfidf"
    BM25 = "bm25"


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75
    # "classic" is ln(N/df), the same IDF the TF-IDF weights use.
    # "smoothed" is the Robertson/Lucene form ln(1 + (N - df + .5)/(df + .5)).
    idf_variant: str = "classic"

    def __post_init__(self) -> None:
        if not (self.k1 >= 0 and math.isfinite(self.k1)):
            raise DomainError(f"k1 must be a finite number >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise DomainError(f"b must lie in [0, 1], got {self.b}")
        if self.idf_variant not in ("classic", "smoothed"):
            raise DomainError(f"unknown idf_variant {self.idf_variant!r}")


@dataclass(frozen=True)
class CompositeWeights:
    weights: tuple[tuple[MetricId, float], ...] = (
        (MetricId.COSINE_TFIDF, 0.5),
        (MetricId.BM25, 0.5),
    )
    normalize_metrics: bool = True

    def __post_init__(self) -> None:
        cleaned = tuple((MetricId(m), float(w)) for m, w in self.weights)
        object.__setattr__(self, "weights", cleaned)
        ids = [m for m, _ in cleaned]
        if len(set(ids)) != len(ids):
            raise DomainError("each metric may be weighted only once")
        if any(not (w >= 0 and math.isfinite(w)) for _, w in cleaned):
            raise DomainError("composite weights must be finite and >= 0")
        if not any(w > 0 for _, w in cleaned):
            raise DomainError("at least one composite weight must be positive")

    @property
    def metrics(self) -> tuple[MetricId, ...]:
        return tuple(m for m, _ in self.weights)

    def scaled(self, factor: float) -> CompositeWeights:
        return CompositeWeights(
            tuple((m, w * factor) for m, w in self.weights), self.normalize_metrics
        )


def idf(n_docs: int, df: int) -> float:
    """ln(N/df), or 0.0 for a term no document contains."""
    if df < 0 or df > n_docs:
        raise DomainError(f"df={df} outside [0, n_docs={n_docs}]")
    if df == 0:
        return 0.0
    return math.log(n_docs / df)


def smoothed_idf(n_docs: int, df: int) -> float:
    if df < 0 or df > n_docs:
        raise DomainError(f"df={df} outside [0, n_docs={n_docs}]")
    if df == 0:
        return 0.0
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def tfidf_weight(tf: int, idf_value: float) -> float:
    return tf * idf_value


def tfidf_vector(snapshot: IndexSnapshot, term_frequencies: Mapping[str, int]) -> SparseVector:
    """Weight each term by tf * idf against the snapshot's statistics.

    Terms with zero weight (absent from the corpus, or present in every
    document) are omitted.
    """
    n = snapshot.n_docs
    vec: SparseVector = {}
    for term, tf in term_frequencies.items():
        w = tfidf_weight(tf, idf(n, snapshot.df(term)))
        if w != 0.0:
            vec[term] = w
    return vec


def query_vector(snapshot: IndexSnapshot, terms: Iterable[str]) -> SparseVector:
    return tfidf_vector(snapshot, Counter(terms))


def document_vector(snapshot: IndexSnapshot, doc_id: int) -> SparseVector:
    return tfidf_vector(snapshot, snapshot.term_frequencies(doc_id))


def norm(v: Mapping[str, float]) -> float:
    return math.sqrt(math.fsum(w * w for w in v.values()))


def dot(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    return math.fsum(w * b[t] for t, w in a.items() if t in b)


def _cosine(dot_value: float, norm_a: float, norm_b: float) -> float:
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return min(1.0, dot_value / (norm_a * norm_b))


def cosine_similarity(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """A.B / (|A| |B|); 0.0 if either vector is empty."""
    return _cosine(dot(a, b), norm(a), norm(b))


def document_norm(snapshot: IndexSnapshot, doc_id: int) -> float:
    norms = snapshot.cache.get("tfidf_norms")
    if norms is None:
        norms = tuple(norm(document_vector(snapshot, i)) for i in range(snapshot.n_docs))
        snapshot.cache["tfidf_norms"] = norms
    snapshot.doc(doc_id)
    return norms[doc_id]


def cosine_score(
    snapshot: IndexSnapshot,
    query_terms: Sequence[str],
    doc_id: int,
    qvec: SparseVector | None = None,
) -> float:
    """Cosine between the query's and a document's TF-IDF vectors.

    Equal to ``cosine_similarity(query_vector(...), document_vector(...))``
    but only touches the query's terms, using a cached document norm.
    """
    if qvec is None:
        qvec = query_vector(snapshot, query_terms)
    tfs = snapshot.term_frequencies(doc_id)
    n = snapshot.n_docs
    overlap = {}
    for term in qvec:
        tf = tfs.get(term, 0)
        if tf:
            overlap[term] = tfidf_weight(tf, idf(n, snapshot.df(term)))
    return _cosine(dot(qvec, overlap), norm(qvec), document_norm(snapshot, doc_id))


def bm25_length_norm(params: Bm25Params, doc_len: int, avgdl: float) -> float:
    """The length factor K = k1 * ((1 - b) + b * |d| / avgdl)."""
    if not avgdl > 0:
        raise DomainError(f"avgdl must be positive, got {avgdl}")
    return params.k1 * ((1.0 - params.b) + params.b * doc_len / avgdl)


def bm25_score(
    snapshot: IndexSnapshot,
    query_terms: Iterable[str],
    doc_id: int,
    params: Bm25Params = Bm25Params(),
) -> float:
    """Sum over distinct query terms of IDF(w) * (k1 + 1) f / (K + f)."""
    doc = snapshot.doc(doc_id)
    tfs = snapshot.term_frequencies(doc_id)
    if snapshot.avgdl <= 0:
        return 0.0
    idf_fn = idf if params.idf_variant == "classic" else smoothed_idf
    n = snapshot.n_docs
    big_k = bm25_length_norm(params, doc.length_tokens, snapshot.avgdl)
    parts = []
    for term in set(query_terms):
        f = tfs.get(term, 0)
        if f:
            # f / (K + f) <= 1 exactly, which keeps each term under IDF * (k1 + 1)
            parts.append(idf_fn(n, snapshot.df(term)) * ((params.k1 + 1.0) * (f / (big_k + f))))
    return math.fsum(parts)


def _as_mapping(metric_values) -> dict[MetricId, float]:
    items = metric_values.items() if isinstance(metric_values, Mapping) else metric_values
    return {MetricId(m): v for m, v in items}


def composite_score(metric_values, weights: CompositeWeights) -> float:
    """Weighted sum of already-computed metric values for one document.

    ``metric_values`` is a mapping or a sequence of ``(MetricId, value)``.
    Normalization is a property of a candidate set, so it is applied by
    :func:`composite_scores`, not here.
    """
    values = _as_mapping(metric_values)
    parts = []
    for metric, w in weights.weights:
        if metric not in values:
            raise MissingMetric(f"no value for weighted metric {metric.value}")
        parts.append(w * values[metric])
    return math.fsum(parts)


def min_max(values: Sequence[float], include_zero: bool = False) -> list[float]:
    """Rescale to [0, 1]. A constant column maps to all zeros.

    ``include_zero`` widens the range as if a 0.0 value were also present.
    """
    if not values:
        return []
    lo, hi = min(values), max(values)
    if include_zero:
        lo, hi = min(lo, 0.0), max(hi, 0.0)
    if hi == lo:
        return [0.0] * len(values)
    span = hi - lo
    return [(v - lo) / span for v in values]


def composite_scores(
    rows: Sequence[Mapping[MetricId, float]],
    weights: CompositeWeights,
) -> list[float]:
    """Composite score for every row of a candidate set.

    With ``normalize_metrics`` each metric column is min-max rescaled with 0
    included in its range. 0 is what any document sharing no term with the
    query scores, so the result is the same whether or not such documents
    are present in ``rows``.
    """
    if not weights.normalize_metrics:
        return [composite_score(r, weights) for r in rows]
    columns = {}
    for metric in weights.metrics:
        try:
            col = [r[metric] for r in rows]
        except KeyError:
            raise MissingMetric(f"no value for weighted metric {metric.value}") from None
        columns[metric] = min_max(col, include_zero=True)
    return [
        composite_score({m: columns[m][i] for m in weights.metrics}, weights)
        for i in range(len(rows))
    ]
