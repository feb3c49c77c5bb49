"""Build-then-freeze inverted index.

An :class:`IndexBuilder` accumulates documents; :meth:`IndexBuilder.commit`
turns it into an immutable :class:`IndexSnapshot` carrying the corpus
statistics every scorer needs (N, avgdl, df).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping, NamedTuple

from .analysis import AnalyzerConfig, analyze
from .errors import DuplicateExternalId, UnknownDocument


class Posting(NamedTuple):
    doc_id: int
    term_frequency: int


@dataclass(frozen=True)
class StoredDocument:
    doc_id: int
    external_id: str
    title: str
    body: str
    length_tokens: int


@dataclass(frozen=True)
class CorpusStats:
    n_docs: int
    avgdl: float
    df: Mapping[str, int]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CorpusStats):
            return NotImplemented
        return (
            self.n_docs == other.n_docs
            and self.avgdl == other.avgdl
            and dict(self.df) == dict(other.df)
        )


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise AssertionError(message)


class IndexSnapshot:
    """Committed, read-only index. Safe to share between threads.

    Documents are addressed by dense ordinal ``doc_id`` (their position in
    :attr:`docs`). Postings lists are tuples sorted by ``doc_id``.
    """

    def __init__(
        self,
        analyzer: AnalyzerConfig,
        docs: tuple[StoredDocument, ...],
        postings: Mapping[str, tuple[Posting, ...]],
        stats: CorpusStats,
        index_titles: bool = False,
    ):
        self._analyzer = analyzer
        self._docs = tuple(docs)
        self._postings = MappingProxyType(dict(postings))
        self._stats = stats
        self._index_titles = index_titles
        self._by_external = {d.external_id: d.doc_id for d in self._docs}
        forward: list[dict[str, int]] = [{} for _ in self._docs]
        for term, plist in self._postings.items():
            for doc_id, tf in plist:
                if 0 <= doc_id < len(forward):
                    forward[doc_id][term] = tf
        self._forward = tuple(MappingProxyType(f) for f in forward)
        # derived scoring data (e.g. TF-IDF norms); values are pure functions
        # of the snapshot so racing writers store identical results
        self.cache: dict = {}

    @property
    def analyzer(self) -> AnalyzerConfig:
        return self._analyzer

    @property
    def docs(self) -> tuple[StoredDocument, ...]:
        return self._docs

    @property
    def postings(self) -> Mapping[str, tuple[Posting, ...]]:
        return self._postings

    @property
    def stats(self) -> CorpusStats:
        return self._stats

    @property
    def index_titles(self) -> bool:
        return self._index_titles

    @property
    def n_docs(self) -> int:
        return self._stats.n_docs

    @property
    def avgdl(self) -> float:
        return self._stats.avgdl

    def df(self, term: str) -> int:
        return self._stats.df.get(term, 0)

    def postings_for(self, term: str) -> tuple[Posting, ...]:
        return self._postings.get(term, ())

    def doc(self, doc_id: int) -> StoredDocument:
        if not isinstance(doc_id, int) or not 0 <= doc_id < len(self._docs):
            raise UnknownDocument(f"no document with id {doc_id!r}")
        return self._docs[doc_id]

    def doc_id_for(self, external_id: str) -> int:
        try:
            return self._by_external[external_id]
        except KeyError:
            raise UnknownDocument(f"no document with external id {external_id!r}") from None

    def term_frequencies(self, doc_id: int) -> Mapping[str, int]:
        """Forward view: term -> tf for one document."""
        self.doc(doc_id)
        return self._forward[doc_id]

    def tf(self, term: str, doc_id: int) -> int:
        return self.term_frequencies(doc_id).get(term, 0)

    def terms(self) -> Iterator[str]:
        return iter(self._postings)

    def analyze(self, raw: str) -> list[str]:
        return analyze(raw, self._analyzer)

    def check_consistency(self) -> None:
        """Raise AssertionError if any cross-structure invariant is broken."""
        stats = self._stats
        _require(stats.n_docs == len(self._docs), "n_docs does not match stored documents")
        _require(set(stats.df) == set(self._postings), "df keys differ from postings terms")
        for i, d in enumerate(self._docs):
            _require(d.doc_id == i, f"document at position {i} has id {d.doc_id}")
        total = 0
        for term, plist in self._postings.items():
            _require(bool(plist), f"empty postings list for {term!r}")
            _require(stats.df[term] == len(plist) <= stats.n_docs, f"bad df for {term!r}")
            prev = -1
            for doc_id, tf in plist:
                _require(prev < doc_id < stats.n_docs, f"unsorted or dangling posting in {term!r}")
                _require(tf >= 1, f"non-positive tf in {term!r}")
                prev = doc_id
                total += tf
        lengths = sum(d.length_tokens for d in self._docs)
        _require(total == lengths, "postings total differs from summed document lengths")
        if stats.n_docs:
            _require(
                abs(stats.avgdl * stats.n_docs - lengths) <= 1e-9 * max(lengths, 1),
                "avgdl inconsistent with document lengths",
            )
        else:
            _require(stats.avgdl == 0.0, "empty index with non-zero avgdl")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IndexSnapshot):
            return NotImplemented
        return (
            self._analyzer == other._analyzer
            and self._index_titles == other._index_titles
            and self._docs == other._docs
            and dict(self._postings) == dict(other._postings)
            and self._stats == other._stats
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"IndexSnapshot(n_docs={self.n_docs}, n_terms={len(self._postings)}, "
            f"avgdl={self.avgdl:.3f})"
        )


class BuilderClosed(RuntimeError):
    pass


class IndexBuilder:
    """Single-writer accumulator. Not thread-safe; consumed by :meth:`commit`.

    Titles are stored for display. They are only indexed (and counted into
    ``length_tokens``) when ``index_titles`` is set.
    """

    def __init__(self, analyzer: AnalyzerConfig | None = None, index_titles: bool = False):
        self.analyzer = analyzer or AnalyzerConfig()
        self.index_titles = index_titles
        self._docs: list[StoredDocument] = []
        self._ids: set[str] = set()
        self._postings: dict[str, list[Posting]] = {}
        self._closed = False

    def __len__(self) -> int:
        return len(self._docs)

    def add_document(self, external_id: str, title: str, body: str) -> int:
        if self._closed:
            raise BuilderClosed("builder already committed")
        if external_id in self._ids:
            raise DuplicateExternalId(f"external id {external_id!r} already added")
        text = f"{title}\n{body}" if self.index_titles else body
        terms = analyze(text, self.analyzer)
        doc_id = len(self._docs)
        # doc ids are assigned in increasing order, so appends keep lists sorted
        for term, tf in Counter(terms).items():
            self._postings.setdefault(term, []).append(Posting(doc_id, tf))
        self._ids.add(external_id)
        self._docs.append(StoredDocument(doc_id, external_id, title, body, len(terms)))
        return doc_id

    def commit(self) -> IndexSnapshot:
        if self._closed:
            raise BuilderClosed("builder already committed")
        self._closed = True
        n = len(self._docs)
        total = sum(d.length_tokens for d in self._docs)
        avgdl = total / n if n else 0.0
        postings = {t: tuple(pl) for t, pl in sorted(self._postings.items())}
        df = {t: len(pl) for t, pl in postings.items()}
        stats = CorpusStats(n_docs=n, avgdl=avgdl, df=MappingProxyType(df))
        snap = IndexSnapshot(self.analyzer, tuple(self._docs), postings, stats, self.index_titles)
        self._docs, self._postings = [], {}
        return snap


def build_index(
    documents,
    analyzer: AnalyzerConfig | None = None,
    index_titles: bool = False,
) -> IndexSnapshot:
    """Convenience: index an iterable of ``(external_id, title, body)``."""
    builder = IndexBuilder(analyzer, index_titles=index_titles)
    for external_id, title, body in documents:
        builder.add_document(external_id, title, body)
    return builder.commit()
