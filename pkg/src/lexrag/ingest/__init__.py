from .cleaning import furniture_key, is_page_number, normalize_text, strip_furniture
from .pdftext import extract_pages, extract_pdf
from .pipeline import default_doc_id, ingest_bytes, ingest_path, pages_from_text
from .structure import (
    DEFAULT_GRAMMAR,
    HeadingGrammar,
    StructNode,
    chain_at,
    detect_structure,
    path_at,
    structure_path,
)
from .types import CleanDocument, Document, PageText

__all__ = [
    "CleanDocument",
    "DEFAULT_GRAMMAR",
    "Document",
    "HeadingGrammar",
    "PageText",
    "StructNode",
    "chain_at",
    "default_doc_id",
    "detect_structure",
    "extract_pages",
    "extract_pdf",
    "furniture_key",
    "ingest_bytes",
    "ingest_path",
    "is_page_number",
    "normalize_text",
    "pages_from_text",
    "path_at",
    "strip_furniture",
    "structure_path",
]
