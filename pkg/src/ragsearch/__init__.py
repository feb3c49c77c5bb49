"""Embeddable full-text retrieval for RAG pipelines.

Inverted index with TF-IDF cosine, BM25 and weighted composite scoring,
SQuAD 2.0 ingestion, a P/R/F1 evaluation harness, and context assembly.
"""

from .analysis import AnalyzerConfig, analyze, strip_html
from .context import ContextBundle, assemble_context
from .errors import (
    DomainError,
    DuplicateExternalId,
    EmptyDataset,
    EmptyQuery,
    EmptyRelevantSet,
    FormatError,
    MissingJudgment,
    MissingMetric,
    ParseError,
    RagSearchError,
    UnknownDocument,
)
from .eval import EvalResult, compare_scorers, emit_report, evaluate_run, precision_recall_f1
from .index import IndexBuilder, IndexSnapshot, Posting, StoredDocument, build_index
from .ingest import build_benchmark_index, parse_squad
from .retrieval import RankedList, ScoredHit, candidates, search, top_k
from .scoring import Bm25Params, CompositeWeights, MetricId
from .storage import load, persist

__version__ = "0.1.0"
