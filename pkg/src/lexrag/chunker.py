"""Sliding-window chunking that never crosses article boundaries."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import InvalidConfigError
from .ingest.structure import StructNode, path_at
from .ingest.types import CleanDocument

_TOKEN_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    text: str
    span: tuple[int, int]


@dataclass
class ChunkConfig:
    max_tokens: int = 180
    overlap_tokens: int = 30
    respect_boundaries: bool = True

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise InvalidConfigError("max_tokens must be positive")
        if not 0 <= self.overlap_tokens < self.max_tokens:
            raise InvalidConfigError("overlap_tokens must satisfy 0 <= overlap < max_tokens")


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    text: str
    span: tuple[int, int]
    token_count: int
    path: str


def tokenize(clean_text: str) -> list[Token]:
    """Maximal runs of non-whitespace characters, with character spans."""
    return [Token(m.group(), (m.start(), m.end())) for m in _TOKEN_RE.finditer(clean_text)]


def window_offsets(n_tokens: int, max_tokens: int, overlap_tokens: int) -> list[tuple[int, int]]:
    """Token-index windows [j*stride, j*stride+max); stops once a window reaches n."""
    if n_tokens == 0:
        return []
    stride = max_tokens - overlap_tokens
    windows = []
    j = 0
    while True:
        lo = j * stride
        hi = min(lo + max_tokens, n_tokens)
        windows.append((lo, hi))
        if hi >= n_tokens:
            return windows
        j += 1


def _boundary_segments(structure: StructNode, text_len: int) -> list[tuple[int, int]]:
    """Article/schedule spans plus the residual ranges between them."""
    spans = sorted(
        node.span for node in structure.walk() if node.kind in ("article", "schedule")
    )
    segments: list[tuple[int, int]] = []
    cursor = 0
    for start, end in spans:
        if start > cursor:
            segments.append((cursor, start))
        segments.append((start, end))
        cursor = max(cursor, end)
    if cursor < text_len:
        segments.append((cursor, text_len))
    return [(s, e) for s, e in segments if s < e]


def chunk(doc: CleanDocument, cfg: ChunkConfig) -> list[Chunk]:
    """Overlapping token windows per segment, tagged with structure paths."""
    if not 0 <= cfg.overlap_tokens < cfg.max_tokens:
        raise InvalidConfigError("overlap_tokens must satisfy 0 <= overlap < max_tokens")

    text = doc.clean_text
    tokens = tokenize(text)
    if cfg.respect_boundaries:
        segments = _boundary_segments(doc.structure, len(text))
    else:
        segments = [(0, len(text))]

    # assign tokens to segments by start offset; both lists are ordered
    per_segment: list[list[Token]] = [[] for _ in segments]
    seg_i = 0
    for tok in tokens:
        while seg_i < len(segments) and tok.span[0] >= segments[seg_i][1]:
            seg_i += 1
        if seg_i < len(segments) and segments[seg_i][0] <= tok.span[0]:
            per_segment[seg_i].append(tok)

    chunks: list[Chunk] = []
    seq = 0
    for seg_tokens in per_segment:
        for lo, hi in window_offsets(len(seg_tokens), cfg.max_tokens, cfg.overlap_tokens):
            first, last = seg_tokens[lo], seg_tokens[hi - 1]
            span = (first.span[0], last.span[1])
            chunks.append(
                Chunk(
                    chunk_id=f"{doc.doc_id}:{seq:04d}",
                    doc_id=doc.doc_id,
                    text=text[span[0]:span[1]],
                    span=span,
                    token_count=hi - lo,
                    path=path_at(doc.structure, span[0]),
                )
            )
            seq += 1
    return chunks
