"""Authenticated REST API over the index, plus the static query console."""

from __future__ import annotations

import hmac
import logging
import os
import threading
from dataclasses import replace

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import indexing, rag
from .config import ServerConfig
from .errors import (
    BudgetTooSmallError,
    CorruptStoreError,
    EmptyDocumentError,
    EmptyIndexError,
    EncryptedPdfError,
    InvalidConfigError,
    LexragError,
    MalformedPdfError,
    NoContextError,
    NoTextLayerError,
    RemoteProtocolError,
    RemoteTimeoutError,
    RemoteUnavailableError,
    StoreLockedError,
)
from .rerank import load_model
from .vecstore import ScoredChunk, VectorStore, exists as store_exists

logger = logging.getLogger(__name__)

RERANKER_FILENAME = "reranker.json"

_STATUS_BY_KIND = {
    MalformedPdfError.kind: 400,
    EncryptedPdfError.kind: 400,
    NoTextLayerError.kind: 400,
    EmptyDocumentError.kind: 400,
    InvalidConfigError.kind: 400,
    BudgetTooSmallError.kind: 400,
    NoContextError.kind: 400,
    "unauthorized": 401,
    "not_found": 404,
    EmptyIndexError.kind: 409,
    StoreLockedError.kind: 409,
    "ingest_conflict": 409,
    RemoteUnavailableError.kind: 502,
    RemoteProtocolError.kind: 502,
    RemoteTimeoutError.kind: 504,
}


class UnauthorizedError(LexragError):
    kind = "unauthorized"


class NotFoundError(LexragError):
    kind = "not_found"


class IngestConflictError(LexragError):
    kind = "ingest_conflict"


class QueryBody(BaseModel):
    question: str
    k: int = 5
    rerank: bool = False


class AnswerBody(BaseModel):
    question: str
    k: int = 5
    backend: str = "stub"
    max_new_tokens: int = 256
    temperature: float = 0.0
    rerank: bool = False


def _chunk_row(c: ScoredChunk) -> dict:
    return {
        "chunk_id": c.chunk_id,
        "path": c.path,
        "text": c.text,
        "cosine_score": c.cosine_score,
        "rerank_score": c.rerank_score,
    }


def answer_to_dict(result: rag.AnswerResult) -> dict:
    return {
        "answer": result.answer,
        "citations": [{"chunk_id": cid, "path": path} for cid, path in result.citations],
        "retrieved": [_chunk_row(c) for c in result.retrieved],
        "backend": result.backend,
        "latency_ms": result.latency_ms,
    }


class Engine:
    """Owns the index snapshot; readers share it, ingest swaps it."""

    def __init__(self, cfg: ServerConfig):
        self.cfg = cfg
        self._ingest_lock = threading.Lock()
        if store_exists(cfg.index_dir):
            self.store = VectorStore.load(cfg.index_dir)
        else:
            self.store = VectorStore(cfg.embedder.dim)
        self.model = None
        model_path = os.path.join(cfg.index_dir, RERANKER_FILENAME)
        if os.path.exists(model_path):
            self.model = load_model(model_path)

    def ingest_bytes(self, data: bytes, source_uri: str = "") -> indexing.IngestSummary:
        if not self._ingest_lock.acquire(blocking=False):
            raise IngestConflictError("another ingest is in progress")
        try:
            snapshot = self.store
            fresh = VectorStore(snapshot.dim)
            if len(snapshot):
                fresh.upsert(snapshot.records())
            summary = indexing.index_bytes(
                data,
                fresh,
                self.cfg.chunk,
                self.cfg.embedder,
                source_uri=source_uri,
                grammar=self.cfg.grammar,
            )
            fresh.save(self.cfg.index_dir)
            self.store = fresh
            return summary
        finally:
            self._ingest_lock.release()

    def query(self, body: QueryBody) -> list[ScoredChunk]:
        store = self.store
        return rag.retrieve(
            body.question,
            body.k,
            body.rerank,
            store,
            self.cfg.embedder,
            model=self.model,
            max_tokens=self.cfg.chunk.max_tokens,
        )

    def answer(self, body: AnswerBody) -> rag.AnswerResult:
        store = self.store
        rag_cfg = replace(
            self.cfg.rag,
            k=body.k,
            rerank_enabled=body.rerank,
            backend=body.backend,
            gen=rag.GenParams(body.max_new_tokens, body.temperature),
            chunk_max_tokens=self.cfg.chunk.max_tokens,
        )
        return rag.answer(
            body.question, store, self.cfg.embedder, rag_cfg, model=self.model
        )


def create_app(cfg: ServerConfig) -> FastAPI:
    app = FastAPI(title="lexrag", docs_url=None, redoc_url=None)
    engine = Engine(cfg)
    app.state.engine = engine

    def auth(authorization: str | None = Header(default=None)):
        if cfg.auth_token is None:
            return
        if not authorization or not authorization.startswith("Bearer "):
            raise UnauthorizedError("missing bearer token")
        if not hmac.compare_digest(authorization[7:], cfg.auth_token):
            raise UnauthorizedError("invalid bearer token")

    @app.exception_handler(LexragError)
    async def lexrag_error_handler(_request: Request, exc: LexragError):
        status = _STATUS_BY_KIND.get(exc.kind, 500)
        return JSONResponse(
            status_code=status,
            content={"error": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"kind": "bad_request", "message": str(exc.errors())}},
        )

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "index_count": len(engine.store)}

    @app.post("/v1/ingest", dependencies=[Depends(auth)])
    async def ingest(request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/"):
            form = await request.form()
            upload = form.get("file")
            if upload is None:
                raise InvalidConfigError("multipart ingest requires a 'file' field")
            data = await upload.read()
            source = upload.filename or "upload"
        else:
            try:
                body = await request.json()
            except ValueError:
                raise InvalidConfigError("ingest body must be JSON or multipart") from None
            path = body.get("path") if isinstance(body, dict) else None
            if not path:
                raise InvalidConfigError("ingest body needs a 'path' field")
            if not os.path.exists(path):
                raise NotFoundError(f"no such file: {path}")
            with open(path, "rb") as fh:
                data = fh.read()
            source = path
        summary = engine.ingest_bytes(data, source_uri=source)
        return {
            "doc_id": summary.doc_id,
            "pages": summary.pages,
            "chunks": summary.chunks,
            "warnings": summary.warnings,
        }

    @app.post("/v1/query", dependencies=[Depends(auth)])
    def query(body: QueryBody):
        results = engine.query(body)
        return {"results": [_chunk_row(c) for c in results]}

    @app.post("/v1/answer", dependencies=[Depends(auth)])
    def answer(body: AnswerBody):
        return answer_to_dict(engine.answer(body))

    @app.get("/v1/chunks/{chunk_id}", dependencies=[Depends(auth)])
    def get_chunk(chunk_id: str):
        rec = engine.store.get(chunk_id)
        if rec is None:
            raise NotFoundError(f"unknown chunk {chunk_id}")
        return {
            "record_id": rec.record_id,
            "chunk_id": rec.chunk_id,
            "doc_id": rec.doc_id,
            "path": rec.path,
            "span": [rec.span[0], rec.span[1]],
            "text": rec.text,
            "meta": rec.meta,
            "vector": rec.vector.values,
        }

    @app.get("/v1/stats", dependencies=[Depends(auth)])
    def stats():
        store = engine.store
        return {
            "docs": store.doc_count(),
            "chunks": len(store),
            "dim": store.dim,
            "reranker_loaded": engine.model is not None,
        }

    if cfg.static_dir:
        app.mount("/", StaticFiles(directory=cfg.static_dir, html=True), name="ui")

    return app


def serve(cfg: ServerConfig):
    """Run until interrupted; in-flight requests get a 5 s drain."""
    import uvicorn

    if cfg.index_dir and not os.path.isdir(cfg.index_dir):
        os.makedirs(cfg.index_dir, exist_ok=True)
    app = create_app(cfg)  # raises CorruptStoreError on a bad index
    uvicorn.run(
        app,
        host=cfg.host,
        port=cfg.port,
        timeout_graceful_shutdown=5,
        log_level="info",
    )
