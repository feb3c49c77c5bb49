"""On-disk index format. See FORMAT.md for the byte layout."""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path
from types import MappingProxyType

from .analysis import AnalyzerConfig
from .errors import FormatError
from .index import CorpusStats, IndexSnapshot, Posting, StoredDocument

MAGIC = b"RAGIDX01"
VERSION = 1
_HEADER = struct.Struct(">8sI32s")
_LEN = struct.Struct(">Q")
_SECTIONS = ("documents", "postings", "stats")


def _ndjson(records) -> bytes:
    return b"".join(
        json.dumps(r, ensure_ascii=False, separators=(",", ":")).encode("utf-8") + b"\n"
        for r in records
    )


def encode(snapshot: IndexSnapshot) -> bytes:
    docs = _ndjson(
        {
            "doc_id": d.doc_id,
            "external_id": d.external_id,
            "title": d.title,
            "body": d.body,
            "length_tokens": d.length_tokens,
        }
        for d in snapshot.docs
    )
    postings = _ndjson(
        {"term": term, "postings": [[p.doc_id, p.term_frequency] for p in plist]}
        for term, plist in sorted(snapshot.postings.items())
    )
    stats = snapshot.stats
    head = {
        "n_docs": stats.n_docs,
        "avgdl": stats.avgdl,
        "index_titles": snapshot.index_titles,
        "analyzer": snapshot.analyzer.to_dict(),
    }
    stats_blob = _ndjson([head, *({"term": t, "df": n} for t, n in sorted(stats.df.items()))])
    payload = b"".join(_LEN.pack(len(s)) + s for s in (docs, postings, stats_blob))
    return _HEADER.pack(MAGIC, VERSION, hashlib.sha256(payload).digest()) + payload


def persist(snapshot: IndexSnapshot, path: str | os.PathLike) -> None:
    """Write atomically: the target is replaced only after a complete write."""
    path = Path(path)
    data = encode(snapshot)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _records(blob: bytes, section: str):
    try:
        text = blob.decode("utf-8")
        return [json.loads(line) for line in text.splitlines() if line]
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{section} section: {exc}") from exc


def decode(data: bytes) -> IndexSnapshot:
    if len(data) < _HEADER.size:
        raise FormatError("file too short for header")
    magic, version, digest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    payload = data[_HEADER.size:]
    if hashlib.sha256(payload).digest() != digest:
        raise FormatError("checksum mismatch")

    blobs = []
    pos = 0
    for name in _SECTIONS:
        if pos + _LEN.size > len(payload):
            raise FormatError(f"truncated before {name} section")
        (n,) = _LEN.unpack_from(payload, pos)
        pos += _LEN.size
        if pos + n > len(payload):
            raise FormatError(f"truncated {name} section")
        blobs.append(payload[pos:pos + n])
        pos += n
    if pos != len(payload):
        raise FormatError("trailing bytes after stats section")

    try:
        docs = tuple(
            StoredDocument(
                r["doc_id"], r["external_id"], r["title"], r["body"], r["length_tokens"]
            )
            for r in _records(blobs[0], "documents")
        )
        postings = {
            r["term"]: tuple(Posting(d, tf) for d, tf in r["postings"])
            for r in _records(blobs[1], "postings")
        }
        head, *df_records = _records(blobs[2], "stats")
        df = {r["term"]: r["df"] for r in df_records}
        stats = CorpusStats(head["n_docs"], head["avgdl"], MappingProxyType(df))
        analyzer = AnalyzerConfig.from_dict(head["analyzer"])
        snap = IndexSnapshot(analyzer, docs, postings, stats, head["index_titles"])
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed record: {exc!r}") from exc
    try:
        snap.check_consistency()
    except AssertionError as exc:
        raise FormatError(f"inconsistent index: {exc}") from exc
    return snap


def load(path: str | os.PathLike) -> IndexSnapshot:
    """Read an index file. Raises OSError if unreadable, FormatError if invalid."""
    with open(path, "rb") as fh:
        return decode(fh.read())
