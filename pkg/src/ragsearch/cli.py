"""Command line interface: build, search, context, eval, serve."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import storage
from .analysis import DEFAULT_STOPWORDS, AnalyzerConfig, load_stopwords
from .errors import EmptyQuery, FormatError, RagSearchError
from .eval import compare_scorers, emit_report
from .ingest import build_benchmark_index, load_squad, merge_outputs
from .scoring import Bm25Params, CompositeWeights, MetricId
from .service import ServiceConfig, context_payload, dumps, search_payload, serve

log = logging.getLogger("ragsearch")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def setup_logging() -> None:
    level = os.environ.get("RAGSEARCH_LOG", "warn").strip().lower()
    logging.basicConfig(
        level=LOG_LEVELS.get(level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def parse_weights(text: str) -> tuple[tuple[MetricId, float], ...]:
    """``"cosine_tfidf=0.5,bm25=0.5"`` -> weight pairs. ``tfidf`` is accepted for cosine."""
    pairs = []
    for item in text.split(","):
        name, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected metric=weight, got {item!r}")
        name = name.strip()
        name = "cosine_tfidf" if name in ("tfidf", "cosine") else name
        try:
            pairs.append((MetricId(name), float(value)))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return tuple(pairs)


def _scoring_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k1", type=float, default=1.2, help="BM25 term-frequency saturation")
    p.add_argument("--b", type=float, default=0.75, help="BM25 length normalization")
    p.add_argument("--idf-variant", choices=["classic", "smoothed"], default="classic")
    p.add_argument("--weights", type=parse_weights, default=None,
                   help="composite weights, e.g. cosine_tfidf=0.5,bm25=0.5")
    p.add_argument("--no-normalize", action="store_true",
                   help="disable min-max rescaling of composite metrics")


def _bm25(args) -> Bm25Params:
    return Bm25Params(args.k1, args.b, args.idf_variant)


def _composite(args) -> CompositeWeights:
    if args.weights is None:
        return CompositeWeights(normalize_metrics=not args.no_normalize)
    return CompositeWeights(args.weights, normalize_metrics=not args.no_normalize)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragsearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="index SQuAD paragraphs")
    p.add_argument("--input", action="append", required=True, type=Path,
                   help="SQuAD 2.0 JSON file (repeatable)")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--sample", type=int, default=None, help="index a seeded sample of N paragraphs")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--stopwords", type=Path, default=None, help="one stopword per line")
    p.add_argument("--index-titles", action="store_true")

    p = sub.add_parser("search", help="run one query")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--scorer", choices=["bm25", "tfidf", "composite"], default="bm25")
    _scoring_options(p)

    p = sub.add_parser("context", help="assemble RAG context for a query")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--budget", type=int, default=512)
    p.add_argument("--scorer", choices=["bm25", "tfidf", "composite"], default="bm25")
    _scoring_options(p)

    p = sub.add_parser("eval", help="compare scorers on SQuAD questions")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--queries", required=True, type=Path, help="SQuAD 2.0 JSON file")
    p.add_argument("--scorers", default="baseline,bm25,tfidf,composite")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--limit", type=int, default=None, help="evaluate only the first N queries")
    p.add_argument("--format", choices=["table", "csv", "json"], default="table")
    p.add_argument("--out", type=Path, default=None)
    _scoring_options(p)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--bind", default="127.0.0.1:7700")
    p.add_argument("--scorer", choices=["bm25", "tfidf", "composite"], default="bm25")
    p.add_argument("--k", type=int, default=5)
    _scoring_options(p)
    return parser


def cmd_build(args) -> int:
    stopwords = load_stopwords(args.stopwords) if args.stopwords else DEFAULT_STOPWORDS
    analyzer = AnalyzerConfig(stopwords=stopwords)
    outputs = [load_squad(path) for path in args.input]
    merged = merge_outputs(outputs)
    sample = (args.sample, args.seed) if args.sample is not None else None
    bench = build_benchmark_index(merged, analyzer, sample, index_titles=args.index_titles)
    storage.persist(bench.snapshot, args.out)
    report = merged.stats.to_dict()
    report.update(
        n_docs=bench.snapshot.n_docs,
        n_terms=len(bench.snapshot.postings),
        n_queries_kept=len(bench.queries),
        n_queries_dropped=bench.n_dropped,
    )
    print(json.dumps(report))
    return 0


def cmd_search(args) -> int:
    snap = storage.load(args.index)
    print(dumps(search_payload(snap, args.query, args.k, args.scorer, _bm25(args), _composite(args))))
    return 0


def cmd_context(args) -> int:
    snap = storage.load(args.index)
    payload = context_payload(
        snap, args.query, args.k, args.budget, args.scorer, _bm25(args), _composite(args)
    )
    print(dumps(payload))
    return 0


def cmd_eval(args) -> int:
    snap = storage.load(args.index)
    data = load_squad(args.queries)
    indexed = {d.external_id for d in snap.docs}
    queries = [(qid, text) for qid, text, _ in data.queries if data.qrels[qid] <= indexed]
    dropped = len(data.queries) - len(queries)
    if dropped:
        log.info("skipping %d questions whose paragraph is not in the index", dropped)
    if args.limit is not None:
        queries = queries[: args.limit]
    results = compare_scorers(
        snap, queries, data.qrels, args.scorers.split(","), args.k, _bm25(args), _composite(args)
    )
    text = emit_report(results, args.format)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args) -> int:
    config = ServiceConfig(
        index_path=str(args.index),
        bind_address=args.bind,
        default_scorer=args.scorer,
        default_k=args.k,
        bm25=_bm25(args),
        composite=_composite(args),
    )
    host_port = config.host_port
    snap = storage.load(config.index_path)
    log.info("loaded %s for %s:%d", snap, *host_port)
    serve(snap, config)
    return 0


COMMANDS = {
    "build": cmd_build,
    "search": cmd_search,
    "context": cmd_context,
    "eval": cmd_eval,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except EmptyQuery as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (OSError, FormatError, RagSearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
