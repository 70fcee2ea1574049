"""End-to-end ingest: raw bytes or text -> CleanDocument."""

from __future__ import annotations

import hashlib
import logging
import os

from ..errors import EmptyDocumentError
from .cleaning import normalize_text, strip_furniture
from .pdftext import extract_pdf
from .structure import detect_structure, DEFAULT_GRAMMAR, HeadingGrammar
from .types import CleanDocument, Document, PageText

logger = logging.getLogger(__name__)


def pages_from_text(text: str) -> list[PageText]:
    """Plain text input; form feeds (U+000C) separate pages."""
    pages = []
    for i, part in enumerate(text.split("\x0c"), start=1):
        lines = [ln.rstrip("\r") for ln in part.split("\n")]
        pages.append(PageText(i, lines))
    return pages


def default_doc_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:12]


def ingest_bytes(
    data: bytes,
    source_uri: str = "",
    doc_id: str | None = None,
    grammar: HeadingGrammar = DEFAULT_GRAMMAR,
) -> tuple[Document, CleanDocument]:
    """Run extraction, cleaning, and structure detection over one input.

    PDF inputs are recognized by their magic bytes; anything else is
    treated as UTF-8 plain text with optional form-feed page separators.
    """
    title = ""
    if data.lstrip()[:5] == b"%PDF-":
        pages, meta = extract_pdf(data)
        title = meta.get("title", "")
    else:
        pages = pages_from_text(data.decode("utf-8"))
    if not pages:
        raise EmptyDocumentError("no pages extracted")

    doc_id = doc_id or default_doc_id(data)
    if not title:
        title = os.path.basename(source_uri) or doc_id

    warnings: list[str] = []
    for page in pages:
        if not any(ln.strip() for ln in page.lines):
            warnings.append(f"page {page.page_no}: no text after extraction")

    cleaned_pages, removed = strip_furniture(pages)
    raw_text = "\n".join(ln for page in cleaned_pages for ln in page.lines)
    clean_text = normalize_text(raw_text)
    structure = detect_structure(clean_text, grammar)

    doc = Document(doc_id, title, source_uri, pages, warnings)
    clean = CleanDocument(doc_id, clean_text, structure, removed)
    return doc, clean


def ingest_path(
    path: str,
    doc_id: str | None = None,
    grammar: HeadingGrammar = DEFAULT_GRAMMAR,
) -> tuple[Document, CleanDocument]:
    with open(path, "rb") as fh:
        data = fh.read()
    return ingest_bytes(data, source_uri=path, doc_id=doc_id, grammar=grammar)
