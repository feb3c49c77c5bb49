"""HTTP JSON service over one immutable index snapshot.

Endpoints:
    GET  /healthz                      {"status": "ok", "n_docs": N}
    GET  /search?q=...&k=5&scorer=bm25 ranked hits
    POST /context {"query", "k", "token_budget"}  prompt-ready context

Errors come back as ``{"error": {"code": ..., "message": ...}}``.
"""

from __future__ import annotations

import json
import logging
import signal
import threading
from dataclasses import dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .context import assemble_context
from .errors import DomainError, EmptyQuery, RagSearchError
from .index import IndexSnapshot
from .retrieval import Scorer, resolve_scorer, search
from .scoring import Bm25Params, CompositeWeights

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 512


@dataclass(frozen=True)
class ServiceConfig:
    index_path: str
    bind_address: str = "127.0.0.1:7700"
    default_scorer: str = "bm25"
    default_k: int = 5
    bm25: Bm25Params = field(default_factory=Bm25Params)
    composite: CompositeWeights = field(default_factory=CompositeWeights)

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.bind_address.rpartition(":")
        if not host or not port.isdigit():
            raise DomainError(f"bind address must be host:port, got {self.bind_address!r}")
        return host, int(port)


class BadRequest(RagSearchError):
    code = "bad_request"


def dumps(obj) -> str:
    # json renders floats with repr(), i.e. the shortest round-trip decimal
    return json.dumps(obj, ensure_ascii=False, sort_keys=False)


def search_payload(
    snapshot: IndexSnapshot,
    query: str,
    k: int,
    scorer: str | Scorer,
    bm25: Bm25Params,
    composite: CompositeWeights,
) -> dict:
    """Body of a search response. CLI and HTTP both print exactly this."""
    ranked = search(snapshot, query, resolve_scorer(scorer, composite), k, bm25)
    docs = snapshot.docs
    return {
        "query": query,
        "k": k,
        "hits": [
            {"external_id": h.external_id, "score": h.score, "title": docs[h.doc_id].title}
            for h in ranked
        ],
    }


def context_payload(
    snapshot: IndexSnapshot,
    query: str,
    k: int,
    token_budget: int,
    scorer: str | Scorer,
    bm25: Bm25Params,
    composite: CompositeWeights,
) -> dict:
    ranked = search(snapshot, query, resolve_scorer(scorer, composite), k, bm25)
    return assemble_context(ranked, snapshot, token_budget, query).to_dict()


def _positive_int(value, name: str) -> int:
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise BadRequest(f"{name} must be an integer") from None
    if isinstance(value, bool) or n < 1:
        raise BadRequest(f"{name} must be a positive integer")
    return n


class SearchHandler(BaseHTTPRequestHandler):
    server: SearchServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):
        log.info("%s %s", self.address_string(), format % args)

    def _send(self, status: int, body: dict) -> None:
        data = dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"error": {"code": code, "message": message}})

    def _dispatch(self, fn) -> None:
        try:
            status, body = fn()
        except (EmptyQuery, DomainError, BadRequest) as exc:
            self._error(HTTPStatus.BAD_REQUEST, exc.code, str(exc))
        except Exception as exc:
            log.exception("request failed")
            self._error(HTTPStatus.INTERNAL_SERVER_ERROR, "internal", str(exc))
        else:
            self._send(status, body)

    def do_GET(self) -> None:
        url = urlsplit(self.path)
        if url.path == "/healthz":
            self._dispatch(lambda: (200, {"status": "ok", "n_docs": self.server.snapshot.n_docs}))
        elif url.path == "/search":
            self._dispatch(lambda: (200, self._search(parse_qs(url.query))))
        else:
            self._error(HTTPStatus.NOT_FOUND, "not_found", f"no route for GET {url.path}")

    def do_POST(self) -> None:
        url = urlsplit(self.path)
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if url.path == "/context":
            self._dispatch(lambda: (200, self._context(raw)))
        else:
            self._error(HTTPStatus.NOT_FOUND, "not_found", f"no route for POST {url.path}")

    def _search(self, params: dict[str, list[str]]) -> dict:
        cfg = self.server.config
        q = params.get("q", [None])[0]
        if q is None:
            raise BadRequest("missing query parameter 'q'")
        k = _positive_int(params.get("k", [cfg.default_k])[0], "k")
        scorer = params.get("scorer", [cfg.default_scorer])[0]
        return search_payload(self.server.snapshot, q, k, scorer, cfg.bm25, cfg.composite)

    def _context(self, raw: bytes) -> dict:
        cfg = self.server.config
        try:
            body = json.loads(raw or b"null")
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise BadRequest(f"request body is not valid JSON: {exc}") from None
        if not isinstance(body, dict) or not isinstance(body.get("query"), str):
            raise BadRequest("body must be an object with a string 'query'")
        k = _positive_int(body.get("k", cfg.default_k), "k")
        budget = _positive_int(body.get("token_budget", DEFAULT_BUDGET), "token_budget")
        scorer = body.get("scorer", cfg.default_scorer)
        if not isinstance(scorer, str):
            raise BadRequest("scorer must be a string")
        return context_payload(
            self.server.snapshot, body["query"], k, budget, scorer, cfg.bm25, cfg.composite
        )


class SearchServer(ThreadingHTTPServer):
    """Thread-per-request server; ``server_close`` waits for in-flight requests."""

    daemon_threads = False
    block_on_close = True

    def __init__(self, snapshot: IndexSnapshot, config: ServiceConfig):
        self.snapshot = snapshot
        self.config = config
        super().__init__(config.host_port, SearchHandler)


def serve(snapshot: IndexSnapshot, config: ServiceConfig) -> None:
    """Serve until SIGINT/SIGTERM, then finish in-flight requests and return."""
    server = SearchServer(snapshot, config)
    host, port = server.server_address[:2]
    log.warning("serving %d documents on http://%s:%d", snapshot.n_docs, host, port)

    def stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, stop)
        signal.signal(signal.SIGINT, stop)
    try:
        server.serve_forever()
    finally:
        server.server_close()
