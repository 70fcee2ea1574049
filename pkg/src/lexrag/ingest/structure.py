"""Heading-grammar based structure detection for legal texts.

The default grammar recognizes the shape of the Indian Constitution
(PART / numbered articles / named schedules / parenthesized clauses) but
every pattern can be overridden through the config file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# paragraph is the root kind; lower number = higher level
_LEVELS = {"paragraph": 0, "part": 1, "schedule": 1, "article": 2, "clause": 3}

_DEFAULT_PATTERNS = {
    "part": r"^PART\s+([IVXLCDM]+[A-Z]?)\b",
    "article": r"^(\d{1,3}[A-Z]{0,2})\.\s+(.*)",
    "schedule": (
        r"^(FIRST|SECOND|THIRD|FOURTH|FIFTH|SIXTH|SEVENTH|EIGHTH|NINTH|"
        r"TENTH|ELEVENTH|TWELFTH)\s+SCHEDULE\b"
    ),
    "clause": r"^\((\d{1,2}|[a-z])\)",
}


@dataclass
class StructNode:
    kind: str  # part | article | schedule | clause | paragraph
    label: str
    title: str
    span: tuple[int, int]
    children: list["StructNode"] = field(default_factory=list)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class HeadingGrammar:
    part: re.Pattern
    article: re.Pattern
    schedule: re.Pattern
    clause: re.Pattern

    @classmethod
    def from_patterns(cls, patterns: dict[str, str] | None = None) -> "HeadingGrammar":
        merged = dict(_DEFAULT_PATTERNS)
        if patterns:
            merged.update(patterns)
        return cls(**{k: re.compile(v) for k, v in merged.items()})


DEFAULT_GRAMMAR = HeadingGrammar.from_patterns()


def _classify(line: str, grammar: HeadingGrammar):
    """Return (kind, label, title) when the line is a heading, else None."""
    m = grammar.part.match(line)
    if m:
        return "part", m.group(1), line[m.end():].strip()
    m = grammar.schedule.match(line)
    if m:
        return "schedule", m.group(1), line[m.end():].strip()
    m = grammar.article.match(line)
    if m:
        return "article", m.group(1), m.group(2).strip()
    m = grammar.clause.match(line)
    if m:
        return "clause", f"({m.group(1)})", ""
    return None


def detect_structure(clean_text: str, grammar: HeadingGrammar = DEFAULT_GRAMMAR) -> StructNode:
    """Build the structure tree over normalized text.

    A node's span runs from its heading start to the next heading of the
    same or a higher level (or end of text). Text with no headings yields
    the bare root node.
    """
    root = StructNode("paragraph", "", "", (0, len(clean_text)))
    # stack of (node, level); span ends finalized when popped
    stack: list[tuple[StructNode, int]] = [(root, 0)]

    offset = 0
    for line in clean_text.split("\n"):
        hit = _classify(line, grammar)
        if hit is not None:
            kind, label, title = hit
            level = _LEVELS[kind]
            while stack[-1][1] >= level:
                node, _ = stack.pop()
                node.span = (node.span[0], offset)
            parent = stack[-1][0]
            node = StructNode(kind, label, title, (offset, len(clean_text)))
            parent.children.append(node)
            stack.append((node, level))
        offset += len(line) + 1  # +1 for the newline

    # nodes still open at EOF already span to len(clean_text)
    return root


def structure_path(node_chain: list[StructNode]) -> str:
    """Render a root-to-leaf chain as a human-readable path, root omitted."""
    segments = []
    for node in node_chain:
        if node.kind == "paragraph":
            continue
        if node.kind == "part":
            segments.append(f"Part {node.label}")
        elif node.kind == "article":
            segments.append(f"Article {node.label}")
        elif node.kind == "schedule":
            segments.append(f"{node.label} Schedule")
        elif node.kind == "clause":
            segments.append(f"Clause {node.label}")
    return " / ".join(segments)


def chain_at(root: StructNode, pos: int) -> list[StructNode]:
    """Root-to-deepest chain of nodes whose spans contain ``pos``."""
    chain = [root]
    node = root
    while True:
        nxt = None
        for child in node.children:
            if child.span[0] <= pos < child.span[1]:
                nxt = child
                break
        if nxt is None:
            return chain
        chain.append(nxt)
        node = nxt


def path_at(root: StructNode, pos: int) -> str:
    return structure_path(chain_at(root, pos))
