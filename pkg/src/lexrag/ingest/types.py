"""Document containers produced by the ingest stages."""

from __future__ import annotations

from dataclasses import dataclass, field

from .structure import StructNode


@dataclass
class PageText:
    """Raw text of one page, lines kept in extraction order."""

    page_no: int
    lines: list[str]


@dataclass
class Document:
    doc_id: str
    title: str
    source_uri: str
    pages: list[PageText]
    ingest_warnings: list[str] = field(default_factory=list)


@dataclass
class CleanDocument:
    """Normalized text plus the detected structure tree.

    Spans inside ``structure`` index into ``clean_text``; lines dropped as
    page furniture are kept in ``removed_furniture`` as (page_no, line).
    """

    doc_id: str
    clean_text: str
    structure: StructNode
    removed_furniture: list[tuple[int, str]] = field(default_factory=list)
