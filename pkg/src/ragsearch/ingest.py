"""SQuAD 2.0 ingestion.

Every paragraph context becomes a document with external id
``"{title}#{paragraph_index}"``; every question (answerable or not) becomes
a query whose single relevant document is the paragraph it was written
against.
"""

from __future__ import annotations

import json
import random
import unicodedata
from dataclasses import dataclass, field
from typing import Any, NamedTuple

from .analysis import AnalyzerConfig
from .errors import EmptyDataset, ParseError
from .index import IndexBuilder, IndexSnapshot


class SquadQuestion(NamedTuple):
    qas_id: str
    question: str
    is_impossible: bool


@dataclass(frozen=True)
class SquadRecord:
    article_title: str
    paragraph_index: int
    context: str
    questions: tuple[SquadQuestion, ...]

    @property
    def external_id(self) -> str:
        return f"{self.article_title}#{self.paragraph_index}"


@dataclass(frozen=True)
class IngestStats:
    n_articles: int
    n_paragraphs: int
    n_questions: int
    n_impossible: int
    n_deduped: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class IngestOutput:
    documents: list[tuple[str, str, str]]
    queries: list[tuple[str, str, bool]]
    qrels: dict[str, frozenset[str]]
    stats: IngestStats
    records: list[SquadRecord] = field(default_factory=list, repr=False)


def _field(obj: Any, key: str, kind: type, path: str):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", path)
    if key not in obj:
        raise ParseError(f"missing required field {key!r}", path)
    value = obj[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ParseError(f"field {key!r} should be {kind.__name__}", f"{path}.{key}")
    return value


def parse_records(json_text: str | bytes) -> list[SquadRecord]:
    """Parse SQuAD JSON into paragraph records, validating required fields."""
    try:
        root = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} (line {exc.lineno} column {exc.colno})") from exc
    data = _field(root, "data", list, "$")
    records = []
    seen_qas: set[str] = set()
    for a, article in enumerate(data):
        apath = f"$.data[{a}]"
        title = _field(article, "title", str, apath)
        paragraphs = _field(article, "paragraphs", list, apath)
        for p, para in enumerate(paragraphs):
            ppath = f"{apath}.paragraphs[{p}]"
            context = _field(para, "context", str, ppath)
            qas = _field(para, "qas", list, ppath)
            questions = []
            for q, qa in enumerate(qas):
                qpath = f"{ppath}.qas[{q}]"
                qas_id = _field(qa, "id", str, qpath)
                question = _field(qa, "question", str, qpath)
                impossible = _field(qa, "is_impossible", bool, qpath)
                answers = _field(qa, "answers", list, qpath)
                for n, ans in enumerate(answers):
                    _field(ans, "text", str, f"{qpath}.answers[{n}]")
                    _field(ans, "answer_start", float, f"{qpath}.answers[{n}]")
                if qas_id in seen_qas:
                    raise ParseError(f"duplicate question id {qas_id!r}", f"{qpath}.id")
                seen_qas.add(qas_id)
                questions.append(SquadQuestion(qas_id, question, impossible))
            records.append(SquadRecord(title, p, context, tuple(questions)))
    return records


def parse_squad(json_text: str | bytes) -> IngestOutput:
    """Parse a SQuAD file into documents, queries and qrels.

    Paragraphs whose context is byte-identical after NFC normalization to
    an earlier one are dropped; their questions point at the survivor.

    Raises:
        ParseError: malformed JSON or a missing/mistyped field (message
            carries a JSON path).
        EmptyDataset: the file holds no paragraphs.
    """
    records = parse_records(json_text)
    if not records:
        raise EmptyDataset("dataset contains no paragraphs")

    documents: list[tuple[str, str, str]] = []
    queries: list[tuple[str, str, bool]] = []
    qrels: dict[str, frozenset[str]] = {}
    by_context: dict[str, str] = {}
    ids: set[str] = set()
    titles: set[str] = set()
    n_deduped = n_impossible = 0
    for rec in records:
        titles.add(rec.article_title)
        key = unicodedata.normalize("NFC", rec.context)
        target = by_context.get(key)
        if target is None:
            target = rec.external_id
            if target in ids:
                raise ParseError(f"document id {target!r} is not unique", "$.data")
            ids.add(target)
            by_context[key] = target
            documents.append((target, rec.article_title, rec.context))
        else:
            n_deduped += 1
        for q in rec.questions:
            queries.append((q.qas_id, q.question, q.is_impossible))
            qrels[q.qas_id] = frozenset({target})
            n_impossible += q.is_impossible

    stats = IngestStats(
        n_articles=len(titles),
        n_paragraphs=len(records),
        n_questions=len(queries),
        n_impossible=n_impossible,
        n_deduped=n_deduped,
    )
    return IngestOutput(documents, queries, qrels, stats, records)


def load_squad(path) -> IngestOutput:
    with open(path, "rb") as fh:
        return parse_squad(fh.read())


def merge_outputs(outputs: list[IngestOutput]) -> IngestOutput:
    """Combine several parsed files (e.g. train and dev) into one corpus."""
    merged = outputs[0]
    for other in outputs[1:]:
        clash = set(merged.qrels) & set(other.qrels)
        if clash:
            raise ParseError(f"question id {min(clash)!r} appears in more than one input")
        clash = {d[0] for d in merged.documents} & {d[0] for d in other.documents}
        if clash:
            raise ParseError(f"document id {min(clash)!r} appears in more than one input")
        a, b = merged.stats, other.stats
        stats = IngestStats(*(x + y for x, y in zip(
            (a.n_articles, a.n_paragraphs, a.n_questions, a.n_impossible, a.n_deduped),
            (b.n_articles, b.n_paragraphs, b.n_questions, b.n_impossible, b.n_deduped),
        )))
        merged = IngestOutput(
            merged.documents + other.documents,
            merged.queries + other.queries,
            {**merged.qrels, **other.qrels},
            stats,
            merged.records + other.records,
        )
    return merged


class Benchmark(NamedTuple):
    snapshot: IndexSnapshot
    queries: list[tuple[str, str]]
    qrels: dict[str, frozenset[str]]
    n_dropped: int


def sample_documents(
    documents: list[tuple[str, str, str]], n: int, seed: int
) -> list[tuple[str, str, str]]:
    """Seeded uniform sample without replacement, kept in original order."""
    if n >= len(documents):
        return list(documents)
    picked = sorted(random.Random(seed).sample(range(len(documents)), n))
    return [documents[i] for i in picked]


def build_benchmark_index(
    output: IngestOutput,
    analyzer: AnalyzerConfig | None = None,
    sample: tuple[int, int] | None = None,
    index_titles: bool = False,
) -> Benchmark:
    """Index all paragraphs, or a seeded sample of ``(n_paragraphs, seed)``.

    Queries whose relevant paragraph was sampled out are dropped and counted.
    """
    docs = output.documents
    if sample is not None:
        n, seed = sample
        docs = sample_documents(docs, n, seed)
    builder = IndexBuilder(analyzer, index_titles=index_titles)
    for external_id, title, body in docs:
        builder.add_document(external_id, title, body)
    snapshot = builder.commit()
    kept = {d[0] for d in docs}
    queries, qrels, dropped = [], {}, 0
    for qid, text, _ in output.queries:
        rel = output.qrels[qid]
        if rel <= kept:
            queries.append((qid, text))
            qrels[qid] = rel
        else:
            dropped += 1
    return Benchmark(snapshot, queries, qrels, dropped)
