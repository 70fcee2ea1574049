"""Shared fixtures: hand-built PDFs, a mock HTTP backend, the bundled corpus."""

from __future__ import annotations

import io
import json
import os
import threading
import zlib
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from lexrag.chunker import ChunkConfig
from lexrag.embedder import EmbedderConfig
from lexrag.indexing import index_file
from lexrag.vecstore import VectorStore

FIXTURES_DIR = os.path.join(
    os.path.dirname(__file__), "..", "src", "lexrag", "fixtures"
)
MINI_CORPUS = os.path.abspath(os.path.join(FIXTURES_DIR, "mini_constitution.txt"))
GOLD_SET = os.path.abspath(os.path.join(FIXTURES_DIR, "gold_set.jsonl"))

# ingest settings the bundled corpus was designed for
CORPUS_CHUNK_CFG = dict(max_tokens=80, overlap_tokens=16)
CORPUS_DIM = 256


def build_pdf(page_contents, compress=False, encrypt=False, n_pages=None):
    """Classic-xref PDF with one content stream per page; test fixture only."""
    objs = []
    n = len(page_contents) if n_pages is None else n_pages
    kids = " ".join(f"{4 + 2 * i} 0 R" for i in range(n))
    objs.append(b"<< /Type /Catalog /Pages 2 0 R >>")
    objs.append(f"<< /Type /Pages /Kids [{kids}] /Count {n} >>".encode())
    objs.append(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>")
    for i, content in enumerate(page_contents):
        objs.append(
            (
                f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
                f"/Resources << /Font << /F1 3 0 R >> >> /Contents {5 + 2 * i} 0 R >>"
            ).encode()
        )
        data = zlib.compress(content) if compress else content
        filt = b"/Filter /FlateDecode " if compress else b""
        objs.append(
            b"<< " + filt + f"/Length {len(data)} >>".encode()
            + b"\nstream\n" + data + b"\nendstream"
        )
    out = io.BytesIO()
    out.write(b"%PDF-1.4\n")
    offsets = []
    for i, body in enumerate(objs, start=1):
        offsets.append(out.tell())
        out.write(f"{i} 0 obj\n".encode() + body + b"\nendobj\n")
    xref_at = out.tell()
    out.write(f"xref\n0 {len(objs) + 1}\n0000000000 65535 f \n".encode())
    for off in offsets:
        out.write(f"{off:010d} 00000 n \n".encode())
    trailer = f"trailer\n<< /Size {len(objs) + 1} /Root 1 0 R "
    if encrypt:
        trailer += "/Encrypt 3 0 R "
    trailer += f">>\nstartxref\n{xref_at}\n%%EOF"
    out.write(trailer.encode())
    return out.getvalue()


def text_page(*lines, top=720, step=14):
    """Content stream showing each line at descending y."""
    parts = [b"BT /F1 12 Tf"]
    y = top
    for line in lines:
        escaped = line.replace("\\", r"\\").replace("(", r"\(").replace(")", r"\)")
        parts.append(f"1 0 0 1 72 {y} Tm ({escaped}) Tj".encode())
        y -= step
    parts.append(b"ET")
    return b" ".join(parts)


@pytest.fixture(scope="session")
def corpus_index(tmp_path_factory):
    """Bundled mini corpus ingested once per session."""
    index_dir = tmp_path_factory.mktemp("corpus_index")
    chunk_cfg = ChunkConfig(**CORPUS_CHUNK_CFG)
    embed_cfg = EmbedderConfig(dim=CORPUS_DIM)
    store = VectorStore(embed_cfg.dim)
    index_file(MINI_CORPUS, store, chunk_cfg, embed_cfg)
    store.save(str(index_dir))
    return {
        "dir": str(index_dir),
        "store": store,
        "chunk_cfg": chunk_cfg,
        "embed_cfg": embed_cfg,
    }


class _MockHandler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802  (http.server API)
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        spec = self.server.behavior  # type: ignore[attr-defined]
        self.server.requests.append(  # type: ignore[attr-defined]
            {
                "path": self.path,
                "body": body,
                "auth": self.headers.get("Authorization"),
            }
        )
        status, payload = spec(self.path, body)
        data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class MockBackend:
    """Threaded HTTP server whose behavior is a (path, body) -> (status, payload) fn."""

    def __init__(self, behavior):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _MockHandler)
        self.server.behavior = behavior
        self.server.requests = []
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self.server.requests

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def mock_backend():
    servers = []

    def start(behavior):
        backend = MockBackend(behavior)
        servers.append(backend)
        return backend

    yield start
    for backend in servers:
        backend.close()
