"""Minimal text extractor for text-layer PDFs.

Covers the subset produced by mainstream generators: classic xref tables or
object streams, FlateDecode/ASCIIHexDecode content streams, simple-font text
operators, and form XObjects. Reading order is top-to-bottom then
left-to-right based on transformed text origins. Pages that carry visible
ink but no text layer are rejected (no OCR).
"""

from __future__ import annotations

import base64
import re
import zlib
from dataclasses import dataclass

from ..errors import (
    EmptyDocumentError,
    EncryptedPdfError,
    MalformedPdfError,
    NoTextLayerError,
)
from .types import PageText

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"

# vertical distance (device units) within which runs share a line
_LINE_TOLERANCE = 2.0
# TJ kerning adjustment (thousandths of an em) treated as a word gap
_TJ_SPACE_THRESHOLD = -200

_PAINTING_OPS = {
    b"S", b"s", b"f", b"F", b"f*", b"B", b"B*", b"b", b"b*", b"sh",
}


@dataclass(frozen=True)
class _Ref:
    num: int


class _Name(str):
    """PDF name object; distinct from decoded string values."""


@dataclass
class _Stream:
    dict: dict
    data_start: int  # absolute offset of the raw stream bytes
    raw: bytes


class _Lexer:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def at_end(self) -> bool:
        return self.pos >= len(self.data)

    def peek(self) -> int:
        return self.data[self.pos] if self.pos < len(self.data) else -1

    def skip_ws(self):
        data = self.data
        while self.pos < len(data):
            c = data[self.pos]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == 0x25:  # % comment to end of line
                while self.pos < len(data) and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def read_token(self) -> bytes:
        """Regular token: run of non-whitespace, non-delimiter bytes."""
        start = self.pos
        data = self.data
        while self.pos < len(data):
            c = data[self.pos]
            if c in _WHITESPACE or c in _DELIMITERS:
                break
            self.pos += 1
        return data[start:self.pos]


def _parse_name(lex: _Lexer) -> _Name:
    lex.pos += 1  # consume '/'
    raw = lex.read_token()
    if b"#" in raw:
        out = bytearray()
        i = 0
        while i < len(raw):
            if raw[i] == 0x23 and i + 2 < len(raw):
                out.append(int(raw[i + 1:i + 3], 16))
                i += 3
            else:
                out.append(raw[i])
                i += 1
        raw = bytes(out)
    return _Name(raw.decode("latin-1"))


def _parse_literal_string(lex: _Lexer) -> bytes:
    data = lex.data
    lex.pos += 1  # consume '('
    out = bytearray()
    depth = 1
    while lex.pos < len(data):
        c = data[lex.pos]
        if c == 0x5C:  # backslash escape
            lex.pos += 1
            if lex.pos >= len(data):
                break
            e = data[lex.pos]
            if e in b"nrtbf":
                out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[e])
                lex.pos += 1
            elif e in b"()\\":
                out.append(e)
                lex.pos += 1
            elif e in b"01234567":
                oct_digits = bytearray()
                while len(oct_digits) < 3 and lex.pos < len(data) and data[lex.pos] in b"01234567":
                    oct_digits.append(data[lex.pos])
                    lex.pos += 1
                out.append(int(oct_digits, 8) & 0xFF)
            elif e in b"\r\n":  # line continuation
                lex.pos += 1
                if e == 0x0D and lex.pos < len(data) and data[lex.pos] == 0x0A:
                    lex.pos += 1
            else:
                out.append(e)
                lex.pos += 1
        elif c == 0x28:
            depth += 1
            out.append(c)
            lex.pos += 1
        elif c == 0x29:
            depth -= 1
            lex.pos += 1
            if depth == 0:
                return bytes(out)
            out.append(c)
        else:
            out.append(c)
            lex.pos += 1
    return bytes(out)


def _parse_hex_string(lex: _Lexer) -> bytes:
    data = lex.data
    lex.pos += 1  # consume '<'
    digits = bytearray()
    while lex.pos < len(data) and data[lex.pos] != 0x3E:
        c = data[lex.pos]
        if c in b"0123456789abcdefABCDEF":
            digits.append(c)
        lex.pos += 1
    lex.pos += 1  # consume '>'
    if len(digits) % 2:
        digits.append(0x30)
    return bytes.fromhex(digits.decode("ascii"))


_NUMBER_RE = re.compile(rb"[+-]?(\d+\.?\d*|\.\d+)")


def _parse_value(lex: _Lexer):
    """One PDF object; ``N G R`` reference lookahead included."""
    lex.skip_ws()
    if lex.at_end():
        raise MalformedPdfError("unexpected end of data")
    c = lex.peek()
    data = lex.data
    if c == 0x2F:  # /
        return _parse_name(lex)
    if c == 0x28:  # (
        return _parse_literal_string(lex)
    if c == 0x3C:  # < or <<
        if data[lex.pos:lex.pos + 2] == b"<<":
            lex.pos += 2
            d = {}
            while True:
                lex.skip_ws()
                if data[lex.pos:lex.pos + 2] == b">>":
                    lex.pos += 2
                    return d
                if lex.at_end():
                    raise MalformedPdfError("unterminated dictionary")
                key = _parse_value(lex)
                if not isinstance(key, _Name):
                    raise MalformedPdfError("dictionary key is not a name")
                d[str(key)] = _parse_value(lex)
        return _parse_hex_string(lex)
    if c == 0x5B:  # [
        lex.pos += 1
        arr = []
        while True:
            lex.skip_ws()
            if lex.peek() == 0x5D:
                lex.pos += 1
                return arr
            if lex.at_end():
                raise MalformedPdfError("unterminated array")
            arr.append(_parse_value(lex))
    if c == 0x29 or c == 0x3E or c == 0x5D or c == 0x7D:
        raise MalformedPdfError("unbalanced delimiter")
    if c == 0x7B:  # { } postscript blocks inside type-4 functions; skip
        lex.pos += 1
        return None
    token = lex.read_token()
    if token == b"":
        raise MalformedPdfError(f"lexing stalled at byte {lex.pos}")
    if token == b"true":
        return True
    if token == b"false":
        return False
    if token == b"null":
        return None
    m = _NUMBER_RE.fullmatch(token)
    if m:
        # possible indirect reference: INT INT R
        if b"." not in token:
            save = lex.pos
            lex.skip_ws()
            second = lex.read_token()
            if second.isdigit():
                lex.skip_ws()
                third = lex.read_token()
                if third == b"R":
                    return _Ref(int(token))
            lex.pos = save
            return int(token)
        return float(token)
    raise MalformedPdfError(f"unexpected token {token[:20]!r}")


def _find_endstream(data: bytes, start: int) -> int:
    idx = data.find(b"endstream", start)
    if idx < 0:
        raise MalformedPdfError("stream without endstream")
    return idx


_OBJ_START_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj")


class _PdfFile:
    def __init__(self, data: bytes):
        self.data = data
        self.objects: dict[int, object] = {}
        self.trailer: dict = {}
        self._scan()
        self._expand_object_streams()

    # -- low-level -----------------------------------------------------

    def _scan(self):
        """Linear pass over all ``N G obj`` definitions, skipping stream bodies.

        Later definitions win, which matches incremental-update semantics
        closely enough for read-only extraction.
        """
        data = self.data
        pos = 0
        while True:
            m = _OBJ_START_RE.search(data, pos)
            t = data.find(b"trailer", pos)
            if t != -1 and (m is None or t < m.start()):
                lex = _Lexer(data, t + len(b"trailer"))
                try:
                    d = _parse_value(lex)
                    if isinstance(d, dict):
                        self.trailer.update(d)
                except MalformedPdfError:
                    pass
                pos = t + len(b"trailer")
                continue
            if m is None:
                break
            num = int(m.group(1))
            lex = _Lexer(data, m.end())
            try:
                value = _parse_value(lex)
            except MalformedPdfError:
                pos = m.end()
                continue
            lex.skip_ws()
            if isinstance(value, dict) and data[lex.pos:lex.pos + 6] == b"stream":
                lex.pos += 6
                if data[lex.pos:lex.pos + 2] == b"\r\n":
                    lex.pos += 2
                elif lex.pos < len(data) and data[lex.pos] in b"\r\n":
                    lex.pos += 1
                body_start = lex.pos
                end = _find_endstream(data, body_start)
                raw = data[body_start:end]
                length = value.get("Length")
                if isinstance(length, int) and length <= len(raw):
                    raw = raw[:length]
                else:
                    raw = raw.rstrip(b"\r\n")
                value = _Stream(value, body_start, raw)
                lex.pos = end + len(b"endstream")
            self.objects[num] = value
            if isinstance(value, dict) and value.get("Type") == _Name("XRef"):
                self.trailer.update(value)
            pos = lex.pos

        # second pass: fix stream slices whose /Length was an indirect ref
        for num, obj in self.objects.items():
            if isinstance(obj, _Stream) and isinstance(obj.dict.get("Length"), _Ref):
                length = self.resolve(obj.dict["Length"])
                if isinstance(length, int) and obj.data_start + length <= len(self.data):
                    obj.raw = self.data[obj.data_start:obj.data_start + length]

    def _expand_object_streams(self):
        """Parse objects packed inside /ObjStm streams (PDF 1.5+)."""
        packed: dict[int, object] = {}
        for obj in list(self.objects.values()):
            if not isinstance(obj, _Stream) or obj.dict.get("Type") != _Name("ObjStm"):
                continue
            try:
                body = self.decode_stream(obj)
                n = self.resolve(obj.dict.get("N"))
                first = self.resolve(obj.dict.get("First"))
                header = _Lexer(body)
                pairs = []
                for _ in range(int(n)):
                    header.skip_ws()
                    onum = int(header.read_token())
                    header.skip_ws()
                    ooff = int(header.read_token())
                    pairs.append((onum, ooff))
                for onum, ooff in pairs:
                    lex = _Lexer(body, int(first) + ooff)
                    packed[onum] = _parse_value(lex)
            except (MalformedPdfError, ValueError, zlib.error):
                continue
        for num, value in packed.items():
            self.objects.setdefault(num, value)

    def resolve(self, value, _depth: int = 0):
        while isinstance(value, _Ref) and _depth < 32:
            value = self.objects.get(value.num)
            _depth += 1
        return value

    def decode_stream(self, stream: _Stream) -> bytes:
        filters = self.resolve(stream.dict.get("Filter"))
        if filters is None:
            return stream.raw
        if not isinstance(filters, list):
            filters = [filters]
        data = stream.raw
        for f in filters:
            name = str(self.resolve(f))
            if name == "FlateDecode":
                try:
                    d = zlib.decompressobj()
                    data = d.decompress(data)
                except zlib.error as exc:
                    raise MalformedPdfError(f"flate decode failed: {exc}") from exc
            elif name == "ASCIIHexDecode":
                hex_part = data.split(b">")[0]
                digits = bytes(c for c in hex_part if c in b"0123456789abcdefABCDEF")
                if len(digits) % 2:
                    digits += b"0"
                data = bytes.fromhex(digits.decode("ascii"))
            elif name == "ASCII85Decode":
                payload = bytes(c for c in data if c not in _WHITESPACE)
                if payload.startswith(b"<~"):
                    payload = payload[2:]
                if payload.endswith(b"~>"):
                    payload = payload[:-2]
                try:
                    data = base64.a85decode(payload)
                except ValueError as exc:
                    raise MalformedPdfError(f"ascii85 decode failed: {exc}") from exc
            else:
                raise MalformedPdfError(f"unsupported stream filter {name}")
        return data

    # -- document structure ---------------------------------------------

    def catalog(self) -> dict:
        root = self.resolve(self.trailer.get("Root"))
        if isinstance(root, dict) and "Pages" in root:
            return root
        for obj in self.objects.values():
            if isinstance(obj, dict) and obj.get("Type") == _Name("Catalog"):
                return obj
        raise MalformedPdfError("no document catalog found")

    def pages(self) -> list[tuple[dict, dict]]:
        """Leaf page dicts in tree order, paired with inherited resources."""
        catalog = self.catalog()
        out: list[tuple[dict, dict]] = []
        seen: set[int] = set()

        def walk(node_value, inherited_resources):
            node = self.resolve(node_value)
            if not isinstance(node, dict) or id(node) in seen:
                return
            seen.add(id(node))
            resources = self.resolve(node.get("Resources")) or inherited_resources
            kids = self.resolve(node.get("Kids"))
            if node.get("Type") == _Name("Page") or (kids is None and "Contents" in node):
                out.append((node, resources if isinstance(resources, dict) else {}))
                return
            if isinstance(kids, list):
                for kid in kids:
                    walk(kid, resources)

        walk(catalog.get("Pages"), {})
        return out

    def info_title(self) -> str:
        info = self.resolve(self.trailer.get("Info"))
        if isinstance(info, dict):
            title = self.resolve(info.get("Title"))
            if isinstance(title, bytes):
                return _decode_text_string(title).strip()
        return ""


def _decode_text_string(raw: bytes) -> str:
    if raw[:2] == b"\xfe\xff":
        return raw[2:].decode("utf-16-be", "replace")
    return raw.decode("latin-1")


# -- affine text-space math ---------------------------------------------

_IDENTITY = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def _mat_mul(m1, m2):
    a1, b1, c1, d1, e1, f1 = m1
    a2, b2, c2, d2, e2, f2 = m2
    return (
        a1 * a2 + b1 * c2,
        a1 * b2 + b1 * d2,
        c1 * a2 + d1 * c2,
        c1 * b2 + d1 * d2,
        e1 * a2 + f1 * c2 + e2,
        e1 * b2 + f1 * d2 + f2,
    )


def _origin(m):
    return m[4], m[5]


@dataclass
class _Run:
    x: float
    y: float
    order: int
    text: str


def _interpret_content(pdf: _PdfFile, content: bytes, resources: dict,
                       runs: list[_Run], ctm, depth: int = 0) -> bool:
    """Execute text-relevant operators; returns True if ink was painted."""
    lex = _Lexer(content)
    operands: list = []
    has_ink = False
    tm = tlm = _IDENTITY
    leading = 0.0
    ctm_stack: list[tuple] = []

    def emit(raw_bytes: bytes):
        text = _decode_text_string(raw_bytes)
        x, y = _origin(_mat_mul(tm, ctm))
        runs.append(_Run(x, y, len(runs), text))

    def next_line(tx: float, ty: float):
        nonlocal tm, tlm
        tlm = _mat_mul((1.0, 0.0, 0.0, 1.0, tx, ty), tlm)
        tm = tlm

    def execute(op: bytes):
        nonlocal tm, tlm, leading, ctm, has_ink
        if op == b"BT":
            tm = tlm = _IDENTITY
        elif op == b"Td" and len(operands) >= 2:
            next_line(float(operands[-2]), float(operands[-1]))
        elif op == b"TD" and len(operands) >= 2:
            leading = -float(operands[-1])
            next_line(float(operands[-2]), float(operands[-1]))
        elif op == b"Tm" and len(operands) >= 6:
            tlm = tm = tuple(float(v) for v in operands[-6:])
        elif op == b"T*":
            next_line(0.0, -leading)
        elif op == b"TL" and operands:
            leading = float(operands[-1])
        elif op == b"Tj" and operands:
            if isinstance(operands[-1], bytes):
                emit(operands[-1])
        elif op == b"'" and operands:
            next_line(0.0, -leading)
            if isinstance(operands[-1], bytes):
                emit(operands[-1])
        elif op == b'"' and len(operands) >= 3:
            next_line(0.0, -leading)
            if isinstance(operands[-1], bytes):
                emit(operands[-1])
        elif op == b"TJ" and operands and isinstance(operands[-1], list):
            pieces: list[str] = []
            for item in operands[-1]:
                if isinstance(item, bytes):
                    pieces.append(_decode_text_string(item))
                elif isinstance(item, (int, float)) and item <= _TJ_SPACE_THRESHOLD:
                    pieces.append(" ")
            text = "".join(pieces)
            if text:
                x, y = _origin(_mat_mul(tm, ctm))
                runs.append(_Run(x, y, len(runs), text))
        elif op == b"q":
            ctm_stack.append(ctm)
        elif op == b"Q":
            if ctm_stack:
                ctm = ctm_stack.pop()
        elif op == b"cm" and len(operands) >= 6:
            ctm = _mat_mul(tuple(float(v) for v in operands[-6:]), ctm)
        elif op == b"Do" and operands and depth < 8:
            name = operands[-1]
            xobjects = pdf.resolve(resources.get("XObject")) or {}
            xobj = pdf.resolve(xobjects.get(str(name))) if isinstance(xobjects, dict) else None
            if isinstance(xobj, _Stream):
                subtype = xobj.dict.get("Subtype")
                if subtype == _Name("Form"):
                    sub_res = pdf.resolve(xobj.dict.get("Resources")) or resources
                    matrix = pdf.resolve(xobj.dict.get("Matrix"))
                    sub_ctm = ctm
                    if isinstance(matrix, list) and len(matrix) == 6:
                        sub_ctm = _mat_mul(tuple(float(v) for v in matrix), ctm)
                    try:
                        body = pdf.decode_stream(xobj)
                    except MalformedPdfError:
                        body = b""
                    if _interpret_content(pdf, body, sub_res, runs, sub_ctm, depth + 1):
                        has_ink = True
                elif subtype == _Name("Image"):
                    has_ink = True
        elif op == b"BI":
            # inline image: skip to EI
            idx = content.find(b"EI", lex.pos)
            lex.pos = len(content) if idx < 0 else idx + 2
            has_ink = True
        elif op in _PAINTING_OPS:
            has_ink = True

    while True:
        lex.skip_ws()
        if lex.at_end():
            break
        c = lex.peek()
        if c == 0x2F or c == 0x28 or c == 0x3C or c == 0x5B or c == 0x7B or (
            0x30 <= c <= 0x39 or c in (0x2B, 0x2D, 0x2E)
        ):
            try:
                operands.append(_parse_value(lex))
            except MalformedPdfError:
                lex.pos += 1
                operands.clear()
            continue

        op = lex.read_token()
        if op == b"":
            lex.pos += 1
            operands.clear()
            continue
        try:
            execute(op)
        except (TypeError, ValueError):
            pass
        operands.clear()

    return has_ink


def _runs_to_lines(runs: list[_Run]) -> list[str]:
    """Group runs into lines by y, then order left-to-right."""
    ordered = sorted(runs, key=lambda r: (-r.y, r.order))
    lines: list[list[_Run]] = []
    current_y: float | None = None
    for run in ordered:
        if current_y is None or abs(run.y - current_y) > _LINE_TOLERANCE:
            lines.append([run])
            current_y = run.y
        else:
            lines[-1].append(run)
    out: list[str] = []
    for group in lines:
        group.sort(key=lambda r: (r.x, r.order))
        pieces: list[str] = []
        last_x: float | None = None
        for run in group:
            if last_x is not None and abs(run.x - last_x) > 0.5 and pieces:
                pieces.append(" ")
            pieces.append(run.text)
            last_x = run.x
        out.append("".join(pieces))
    return out


def _page_content(pdf: _PdfFile, page: dict) -> bytes:
    contents = pdf.resolve(page.get("Contents"))
    if contents is None:
        return b""
    if isinstance(contents, _Stream):
        return pdf.decode_stream(contents)
    if isinstance(contents, list):
        parts = []
        for item in contents:
            s = pdf.resolve(item)
            if isinstance(s, _Stream):
                parts.append(pdf.decode_stream(s))
        return b"\n".join(parts)
    return b""


def extract_pdf(data: bytes) -> tuple[list[PageText], dict]:
    """Extract page texts and document metadata from PDF bytes."""
    if b"%PDF-" not in data[:1024]:
        raise MalformedPdfError("missing %PDF header")
    pdf = _PdfFile(data)
    if pdf.trailer.get("Encrypt") is not None:
        raise EncryptedPdfError("document is password-protected")
    pages = pdf.pages()
    if not pages:
        raise EmptyDocumentError("document has zero pages")

    out: list[PageText] = []
    for page_no, (page, resources) in enumerate(pages, start=1):
        content = _page_content(pdf, page)
        runs: list[_Run] = []
        has_ink = _interpret_content(pdf, content, resources, runs, _IDENTITY)
        lines = _runs_to_lines(runs)
        if not any(line.strip() for line in lines):
            if has_ink:
                raise NoTextLayerError(
                    f"page {page_no} has drawable content but no extractable text"
                )
            lines = []
        out.append(PageText(page_no, lines))
    return out, {"title": pdf.info_title()}


def extract_pages(pdf_bytes: bytes) -> list[PageText]:
    """Page texts of a text-layer PDF, in page order."""
    return extract_pdf(pdf_bytes)[0]
