#!/usr/bin/env python3
"""Build the bundled mini corpus and gold set, verifying retrieval properties.

The corpus is designed so that, when ingested with max_tokens=80 and
overlap=16, every article yields exactly three chunks, each question's
vocabulary appears in exactly one article, and top-3 retrieval returns
precisely that article's chunks. Run from the repo root:

    python tools/gen_fixtures.py
"""

from __future__ import annotations

import json
import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from lexrag.chunker import ChunkConfig, chunk
from lexrag.embedder import EmbedderConfig, embed_batch, embed_text
from lexrag.ingest import detect_structure, ingest_bytes, normalize_text
from lexrag.rag import PROMPT_HEADER, build_prompt, generate_stub
from lexrag.vecstore import ScoredChunk

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "lexrag", "fixtures")
MAX_TOKENS = 80
OVERLAP = 16
DIM = 256
K = 3

# words allowed in every article (questions never use them)
SHARED = {
    "the", "a", "an", "of", "to", "in", "on", "or", "and", "that", "this",
    "be", "is", "are", "was", "were", "shall", "may", "must", "any", "every",
    "no", "all", "each", "such", "its", "their", "by", "with", "within",
    "without", "found", "kept", "entered", "pass", "rest", "touching",
    "restored", "outside", "notice", "lawful", "form", "record", "registry",
    "officer", "duties", "authority", "today", "issue",
}

# question-only words (never appear in the corpus)
QUERY_ONLY = {"which", "measures", "govern", "oversight", "for", "under"}

# 8 content words per theme; the first five appear in that theme's question
THEMES = [
    ("Falconry and raptor custody",
     ["falconry", "raptors", "hawks", "perches", "mews", "jesses", "tethers", "moulting"]),
    ("Barges and canal locks",
     ["barges", "locks", "towpaths", "dredging", "weirs", "sluices", "ferries", "moorings"]),
    ("Apiaries and swarm keeping",
     ["apiaries", "beekeepers", "hives", "swarms", "honeycombs", "nectar", "pollinators", "waxworks"]),
    ("Lighthouses and beacon watch",
     ["lighthouses", "beacons", "lanterns", "keepers", "shoals", "lenses", "foghorns", "wicks"]),
    ("Vineyards and cask cellars",
     ["vineyards", "grapevines", "trellises", "vintages", "casks", "cellars", "pressing", "lees"]),
    ("Railways and locomotive sidings",
     ["railways", "locomotives", "sidings", "gauges", "sleepers", "signalmen", "carriages", "turntables"]),
    ("Observatories and telescope domes",
     ["observatories", "telescopes", "astronomers", "domes", "eyepieces", "almanacs", "meridians", "starlight"]),
    ("Trawlers and herring quotas",
     ["trawlers", "herring", "quotas", "wharves", "skippers", "salting", "catches", "nets"]),
    ("Mints and coinage dies",
     ["mints", "coinage", "dies", "bullion", "assayers", "milling", "denominations", "alloys"]),
    ("Archives and vellum manuscripts",
     ["archives", "manuscripts", "vellum", "scribes", "catalogues", "bindings", "folios", "ledgers"]),
    ("Granaries and threshing floors",
     ["granaries", "silos", "threshing", "millers", "bushels", "chaff", "winnowing", "grainlofts"]),
    ("Pilotage and anchorage grounds",
     ["pilotage", "anchorage", "quays", "breakwaters", "harbormasters", "buoys", "ballast", "berths"]),
    ("Woodlands and timber felling",
     ["woodlands", "timber", "sawyers", "coppicing", "rangers", "saplings", "undergrowth", "felling"]),
    ("Telegraphs and galvanic relays",
     ["telegraphs", "telegraphists", "relays", "insulators", "galvanic", "dispatches", "keyboards", "signalposts"]),
    ("Quarries and granite masonry",
     ["quarries", "masonry", "chisels", "granite", "quarrymen", "gravel", "hoists", "slabs"]),
    ("Orchards and cider presses",
     ["orchards", "pomology", "cider", "grafting", "seedlings", "windfalls", "orchardists", "blossoms"]),
    ("Playhouses and stage troupes",
     ["playhouses", "troupes", "rehearsals", "costumes", "stagehands", "matinees", "curtains", "prompters"]),
    ("Museums and curated relics",
     ["museums", "curators", "exhibits", "galleries", "relics", "plinths", "donors", "acquisitions"]),
    ("Viaducts and girder spans",
     ["viaducts", "girders", "trusses", "abutments", "parapets", "footings", "rivets", "piersmen"]),
    ("Printers and typeset galleys",
     ["printers", "typesetting", "galleys", "typefaces", "inksmiths", "broadsheets", "compositors", "proofsheets"]),
]

QUESTION_ARTICLES = [1, 3, 5, 7, 9, 11, 13, 15, 17, 19]  # 1-based article numbers

_FILLERS = [
    "Every {0} and each {5} shall be entered in the {6} record.",
    "No {1} may pass to any {7} without notice in lawful form.",
    "The {2} of every {5} must be kept within the {6} registry.",
    "Any {3} found outside a {7} shall be restored by the {4} officer.",
    "All {4} duties touching {0} and {2} rest with the registry.",
    "Each {1} and every {3} shall issue notice to the {5} officer.",
    "Such {0} records of {4} and {2} must rest in lawful form.",
    "The {6} and the {7} shall be kept with every {1} record.",
]

_ROMAN = ["I", "II", "III", "IV"]


def article_text(number: int, title: str, kw: list[str]) -> str:
    lines = [f"{number}. {title}."]
    lines.append(
        f"The {kw[0]} {kw[1]} for {kw[2]} {kw[3]} issue under {kw[4]} authority today."
    )
    i = 0
    while sum(len(ln.split()) for ln in lines) < 165:
        lines.append(_FILLERS[i % len(_FILLERS)].format(*kw))
        i += 1
    return "\n".join(lines)


def question_for(kw: list[str]) -> str:
    return (
        f"Which measures govern {kw[0]} {kw[1]} for {kw[2]} {kw[3]} "
        f"under {kw[4]} oversight?"
    )


def build_corpus() -> str:
    blocks = [
        "PREAMBLE",
        "We the people hereby adopt and enact this charter so that union holds.",
    ]
    for part_idx in range(4):
        blocks.append("")
        blocks.append(f"PART {_ROMAN[part_idx]}")
        for slot in range(5):
            art_no = part_idx * 5 + slot + 1
            title, kw = THEMES[art_no - 1]
            blocks.append("")
            blocks.append(article_text(art_no, title, kw))
    blocks.append("")
    blocks.append("FIRST SCHEDULE")
    blocks.append(
        "The enumerated territories keep their charter seats as set out herein."
    )
    return "\n".join(blocks) + "\n"


def oracle_cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return 0.0 if na == 0 or nb == 0 else dot / (na * nb)


def main():
    corpus = build_corpus()
    assert normalize_text(corpus) == corpus, "corpus must be normalization-stable"

    # vocabulary discipline: theme words unique, never shared or query-only
    seen: dict[str, int] = {}
    for idx, (_, kws) in enumerate(THEMES):
        for w in kws:
            assert w not in SHARED and w not in QUERY_ONLY, w
            assert w not in seen, f"{w} reused across themes {seen.get(w)} and {idx}"
            seen[w] = idx
    corpus_words = {w.strip(".,?").lower() for w in corpus.split()}
    for w in QUERY_ONLY - {"for", "under"}:
        assert w not in corpus_words, f"query-only word {w} leaked into corpus"

    doc, clean = ingest_bytes(corpus.encode("utf-8"), doc_id="minicorpus")
    assert clean.clean_text == corpus, "ingest must not alter the corpus"

    articles = [n for n in clean.structure.walk() if n.kind == "article"]
    assert len(articles) == 20, len(articles)

    cfg = ChunkConfig(max_tokens=MAX_TOKENS, overlap_tokens=OVERLAP)
    chunks = chunk(clean, cfg)
    by_path: dict[str, list] = {}
    for c in chunks:
        by_path.setdefault(c.path, []).append(c)
    for part_idx in range(4):
        for slot in range(5):
            art_no = part_idx * 5 + slot + 1
            path = f"Part {_ROMAN[part_idx]} / Article {art_no}"
            got = by_path.get(path, [])
            assert len(got) == 3, f"{path}: {len(got)} chunks (want 3)"

    embed_cfg = EmbedderConfig(dim=DIM)
    vectors = embed_batch([c.text for c in chunks], embed_cfg)

    gold_items = []
    for art_no in QUESTION_ARTICLES:
        title, kw = THEMES[art_no - 1]
        part = _ROMAN[(art_no - 1) // 5]
        path = f"Part {part} / Article {art_no}"
        question = question_for(kw)
        qv = embed_text(question, embed_cfg)

        scored = sorted(
            ((oracle_cosine(qv.values, v.values), c) for c, v in zip(chunks, vectors)),
            key=lambda t: (-t[0], t[1].chunk_id),
        )
        top = [c for _, c in scored[:K]]
        got_paths = {c.path for c in top}
        assert got_paths == {path}, f"{path}: oracle top-3 paths {got_paths}"
        margin = scored[K - 1][0] - scored[K][0]
        assert margin > 0.05, f"{path}: ranking margin {margin:.4f} too thin"

        # the stub must return the definition sentence verbatim
        definition = (
            f"The {kw[0]} {kw[1]} for {kw[2]} {kw[3]} issue under {kw[4]} authority today."
        )
        cands = [
            ScoredChunk(c.chunk_id, c.doc_id, c.path, c.text, c.span, s)
            for s, c in scored[:K]
        ]
        bundle = build_prompt(question, cands, 512)
        assert len(bundle.included) == K, "all three chunks must fit the budget"
        answer, citation = generate_stub(bundle, question)
        assert answer == definition, f"{path}: stub chose {answer!r}"

        gold_items.append(
            {"question": question, "relevant": [path], "gold_answer": definition}
        )
        print(f"{path}: margin {margin:.3f}, stub answer verified")

    os.makedirs(OUT_DIR, exist_ok=True)
    with open(os.path.join(OUT_DIR, "mini_constitution.txt"), "w") as fh:
        fh.write(corpus)
    with open(os.path.join(OUT_DIR, "gold_set.jsonl"), "w") as fh:
        for item in gold_items:
            fh.write(json.dumps(item) + "\n")
    token_total = len(corpus.split())
    print(f"corpus: {token_total} tokens, {len(chunks)} chunks; gold: {len(gold_items)} questions")
    print(f"wrote {OUT_DIR}/mini_constitution.txt and gold_set.jsonl")


if __name__ == "__main__":
    main()
