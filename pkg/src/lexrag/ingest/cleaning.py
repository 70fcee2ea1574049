"""Page-furniture removal and text normalization."""

from __future__ import annotations

import math
import re
import unicodedata
from collections import defaultdict

from .types import PageText

# decoration characters allowed around a bare page number
_PAGE_NUM_RE = re.compile(
    r"^[-–—(\[)\]]?\s*(?:\d{1,4}|[IVXLCDMivxlcdm]{1,7})\s*[-–—(\[)\]]?$"
)

# furniture key must repeat on at least this fraction of pages
_REPEAT_FRACTION = 0.6
# lines eligible for removal: first/last N non-blank lines of a page
_CANDIDATE_ZONE = 3

_QUOTE_MAP = str.maketrans({
    "“": '"', "”": '"', "„": '"',
    "‘": "'", "’": "'", "‚": "'",
})


def furniture_key(line: str) -> str:
    """Normalized key used to match repeated headers/footers across pages."""
    collapsed = re.sub(r"\s+", " ", line.strip()).lower()
    return re.sub(r"\d", "#", collapsed)


def is_page_number(line: str) -> bool:
    return bool(_PAGE_NUM_RE.match(line.strip()))


def _candidate_indices(lines: list[str]) -> set[int]:
    non_blank = [i for i, ln in enumerate(lines) if ln.strip()]
    return set(non_blank[:_CANDIDATE_ZONE]) | set(non_blank[-_CANDIDATE_ZONE:])


def strip_furniture(pages: list[PageText]) -> tuple[list[PageText], list[tuple[int, str]]]:
    """Remove repeated headers/footers and standalone page numbers.

    Repetition-based removal needs >= 3 pages; a key counts as furniture
    when it appears among the candidate lines of enough pages. Page-number
    lines are removed from the candidate zone regardless of page count.
    Body lines are never touched.
    """
    page_count = len(pages)
    candidates = [_candidate_indices(p.lines) for p in pages]

    frequent: set[str] = set()
    if page_count >= 3:
        key_pages: dict[str, set[int]] = defaultdict(set)
        for p_i, page in enumerate(pages):
            for i in candidates[p_i]:
                key_pages[furniture_key(page.lines[i])].add(p_i)
        threshold = math.ceil(_REPEAT_FRACTION * page_count)
        frequent = {k for k, ps in key_pages.items() if len(ps) >= threshold}

    out_pages: list[PageText] = []
    removed: list[tuple[int, str]] = []
    for p_i, page in enumerate(pages):
        kept: list[str] = []
        for i, line in enumerate(page.lines):
            if i in candidates[p_i] and (
                furniture_key(line) in frequent or is_page_number(line)
            ):
                removed.append((page.page_no, line))
                continue
            kept.append(line)
        out_pages.append(PageText(page.page_no, kept))
    return out_pages, removed


def _collapse_line(line: str) -> str:
    return re.sub(r"[ \t]+", " ", line).strip()


def _join_hyphenated(lines: list[str]) -> list[str]:
    """Merge "frag-\\ncontinuation" pairs when the break splits a word."""
    out: list[str] = []
    for line in lines:
        if out:
            prev = out[-1]
            if (
                len(prev) >= 2
                and prev.endswith("-")
                and prev[-2].isalpha()
                and line
                and line[0].isalpha()
                and line[0].islower()
            ):
                out[-1] = prev[:-1] + line
                continue
        out.append(line)
    return out


def _collapse_blank_runs(lines: list[str]) -> list[str]:
    # runs of >= 3 blank lines collapse to a single blank line
    out: list[str] = []
    blanks = 0
    for line in lines:
        if line == "":
            blanks += 1
            continue
        if blanks:
            out.extend([""] * (1 if blanks >= 3 else blanks))
            blanks = 0
        out.append(line)
    if blanks:
        out.extend([""] * (1 if blanks >= 3 else blanks))
    return out


def normalize_text(raw: str) -> str:
    """Canonicalize extracted text; idempotent by construction.

    NFC composition, LF line endings, straight quotes, per-line whitespace
    collapse and trim, hyphenated line-break repair, and blank-run collapse.
    """
    text = unicodedata.normalize("NFC", raw)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = text.translate(_QUOTE_MAP)
    lines = [_collapse_line(ln) for ln in text.split("\n")]
    lines = _join_hyphenated(lines)
    lines = _collapse_blank_runs(lines)
    return "\n".join(lines)
