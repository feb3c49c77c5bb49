import os
import threading
from pathlib import Path

import pytest

import synth
from ragsearch import AnalyzerConfig, build_index, storage
from ragsearch.ingest import build_benchmark_index, parse_squad
from ragsearch.service import SearchServer, ServiceConfig

SQUAD_ENV = "RAGSEARCH_SQUAD_DIR"


@pytest.fixture(scope="session")
def synthetic_snapshot():
    return build_index(synth.documents(1000, seed=3))


@pytest.fixture(scope="session")
def squad_text():
    return synth.squad_json(n_articles=60, seed=11, duplicate_every=25)


@pytest.fixture(scope="session")
def squad_output(squad_text):
    return parse_squad(squad_text)


@pytest.fixture(scope="session")
def squad_bench(squad_output):
    return build_benchmark_index(squad_output, AnalyzerConfig())


@pytest.fixture(scope="session")
def squad_file(tmp_path_factory, squad_text):
    path = tmp_path_factory.mktemp("squad") / "synthetic-v2.0.json"
    path.write_text(squad_text, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def index_file(tmp_path_factory, squad_bench):
    path = tmp_path_factory.mktemp("index") / "synthetic.idx"
    storage.persist(squad_bench.snapshot, path)
    return path


def squad_path(name):
    """Path to an official SQuAD 2.0 file, or None when not configured."""
    root = os.environ.get(SQUAD_ENV)
    if not root:
        return None
    path = Path(root) / name
    return path if path.exists() else None


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid or rep.when != "call" and outcome != "error":
                continue
            name = nodeid.split("::", 1)[1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}")


@pytest.fixture(scope="session")
def live_server(index_file):
    """Base URL of a SearchServer on an ephemeral port, serving ``index_file``."""
    config = ServiceConfig(index_path=str(index_file), bind_address="127.0.0.1:0")
    server = SearchServer(storage.load(index_file), config)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
    thread.join(5)
