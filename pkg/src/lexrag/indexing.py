"""Composition shared by the CLI and the server: file -> indexed chunks."""

from __future__ import annotations

from dataclasses import dataclass

from .chunker import ChunkConfig, chunk
from .embedder import EmbedderConfig, embed_batch
from .ingest import DEFAULT_GRAMMAR, HeadingGrammar, ingest_bytes
from .vecstore import VectorRecord, VectorStore


@dataclass
class IngestSummary:
    doc_id: str
    pages: int
    chunks: int
    warnings: list[str]


def index_bytes(
    data: bytes,
    store: VectorStore,
    chunk_cfg: ChunkConfig,
    embed_cfg: EmbedderConfig,
    source_uri: str = "",
    grammar: HeadingGrammar = DEFAULT_GRAMMAR,
) -> IngestSummary:
    """Extract, clean, structure, chunk, embed, and upsert one document."""
    doc, clean = ingest_bytes(data, source_uri=source_uri, grammar=grammar)
    chunks = chunk(clean, chunk_cfg)
    vectors = embed_batch([c.text for c in chunks], embed_cfg)
    next_id = store.next_record_id()
    records = [
        VectorRecord(
            record_id=next_id + i,
            chunk_id=c.chunk_id,
            doc_id=c.doc_id,
            path=c.path,
            vector=vec,
            text=c.text,
            span=c.span,
            meta={"token_count": str(c.token_count)},
        )
        for i, (c, vec) in enumerate(zip(chunks, vectors))
    ]
    store.upsert(records)
    return IngestSummary(doc.doc_id, len(doc.pages), len(records), doc.ingest_warnings)


def index_file(
    path: str,
    store: VectorStore,
    chunk_cfg: ChunkConfig,
    embed_cfg: EmbedderConfig,
    grammar: HeadingGrammar = DEFAULT_GRAMMAR,
) -> IngestSummary:
    with open(path, "rb") as fh:
        data = fh.read()
    return index_bytes(
        data, store, chunk_cfg, embed_cfg, source_uri=path, grammar=grammar
    )
