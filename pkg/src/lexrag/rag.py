"""Retrieval, prompt assembly, and answer generation."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field

import requests

from .embedder import EmbedderConfig, embed_text
from .errors import (
    BudgetTooSmallError,
    EmptyIndexError,
    InvalidConfigError,
    NoContextError,
    RemoteProtocolError,
    RemoteTimeoutError,
    RemoteUnavailableError,
)
from .evalkit import answer_token_f1
from .rerank import RerankModel, score_candidates
from .vecstore import ScoredChunk, VectorStore

logger = logging.getLogger(__name__)

# retrieval pool widened to this size before re-ranking
RERANK_POOL = 20

PROMPT_HEADER = "You are a legal research assistant. Answer strictly from the context."

GEN_TOKEN_ENV = "LEXRAG_GEN_TOKEN"
RETRY_ATTEMPTS = 3
RETRY_BACKOFF_MS = (500, 1000, 2000)

_SENTENCE_ENDERS = ".?!"


@dataclass
class GenParams:
    max_new_tokens: int = 256
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_new_tokens <= 0:
            raise InvalidConfigError("max_new_tokens must be positive")
        if self.temperature < 0:
            raise InvalidConfigError("temperature must be non-negative")


@dataclass
class RagConfig:
    k: int = 5
    rerank_enabled: bool = False
    backend: str = "stub"  # stub | remote
    budget_tokens: int = 512
    gen: GenParams = field(default_factory=GenParams)
    gen_base_url: str | None = None
    chunk_max_tokens: int = 180

    def __post_init__(self):
        if self.backend not in ("stub", "remote"):
            raise InvalidConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and not self.gen_base_url:
            raise InvalidConfigError("remote backend requires gen_base_url")


@dataclass
class PromptBundle:
    prompt_text: str
    included: list[tuple[str, str]]  # (chunk_id, path) in render order
    token_count: int
    budget: int
    chunks: list[ScoredChunk] = field(default_factory=list)


@dataclass
class AnswerResult:
    answer: str
    citations: list[tuple[str, str]]
    retrieved: list[ScoredChunk]
    backend: str
    latency_ms: float


def retrieve(
    question: str,
    k: int,
    rerank_enabled: bool,
    store: VectorStore,
    embed_cfg: EmbedderConfig,
    model: RerankModel | None = None,
    *,
    max_tokens: int = 180,
) -> list[ScoredChunk]:
    """Embed the question, rank by cosine, optionally re-rank, cut to k."""
    if len(store) == 0:
        raise EmptyIndexError("index contains no records")
    if k < 1:
        raise InvalidConfigError("k must be >= 1")
    query = embed_text(question, embed_cfg)
    pool = max(k, RERANK_POOL) if rerank_enabled else k
    candidates = store.top_k(query, pool)
    if rerank_enabled:
        candidates = score_candidates(
            candidates, question, model, dim=embed_cfg.dim, max_tokens=max_tokens
        )
    return candidates[:k]


def _render_prompt(question: str, chunks: list[ScoredChunk]) -> str:
    lines = [PROMPT_HEADER, "", "Context:"]
    for c in chunks:
        lines.append(f"[{c.path}] {c.text}")
    lines += ["", f"Question: {question}", "Answer:"]
    return "\n".join(lines)


def build_prompt(
    question: str, candidates: list[ScoredChunk], budget_tokens: int = 512
) -> PromptBundle:
    """Admit candidates greedily in score order while the prompt fits.

    Admission stops at the first overflowing candidate (greedy prefix);
    admitted chunks are rendered in ascending document position.
    """
    base_count = len(_render_prompt(question, []).split())
    if base_count > budget_tokens:
        raise BudgetTooSmallError(
            f"template and question need {base_count} tokens, budget is {budget_tokens}"
        )
    admitted: list[ScoredChunk] = []
    count = base_count
    for cand in candidates:
        block_count = len(f"[{cand.path}] {cand.text}".split())
        if count + block_count > budget_tokens:
            break
        admitted.append(cand)
        count += block_count
    if not admitted:
        logger.warning("prompt built with empty context section")
    ordered = sorted(admitted, key=lambda c: (c.doc_id, c.span[0]))
    text = _render_prompt(question, ordered)
    return PromptBundle(
        prompt_text=text,
        included=[(c.chunk_id, c.path) for c in ordered],
        token_count=count,
        budget=budget_tokens,
        chunks=ordered,
    )


def split_sentences(text: str) -> list[tuple[str, int]]:
    """(sentence, offset) pairs; boundaries are ., ?, ! + whitespace or newlines."""
    out = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _SENTENCE_ENDERS and (i + 1 == n or text[i + 1].isspace()):
            out.append((text[start:i + 1], start))
            start = i + 1
        elif ch == "\n":
            out.append((text[start:i], start))
            start = i + 1
        i += 1
    if start < n:
        out.append((text[start:], start))
    cleaned = []
    for sentence, offset in out:
        stripped = sentence.strip()
        if stripped:
            cleaned.append((stripped, offset + sentence.index(stripped[0])))
    return cleaned


def generate_stub(prompt: PromptBundle, question: str) -> tuple[str, tuple[str, str]]:
    """Extractive backend: the context sentence with maximal token-overlap F1.

    Ties break by prompt order then earliest sentence offset, which keeps
    the output deterministic.
    """
    if not prompt.chunks:
        raise NoContextError("no chunks were included in the prompt")
    best = None
    for order, chunk in enumerate(prompt.chunks):
        for sentence, offset in split_sentences(chunk.text):
            score = answer_token_f1(sentence, question)
            key = (-score, order, offset)
            if best is None or key < best[0]:
                best = (key, sentence, (chunk.chunk_id, chunk.path))
    if best is None:
        raise NoContextError("included chunks contain no sentences")
    return best[1], best[2]


def generate_remote(
    prompt: PromptBundle,
    params: GenParams,
    base_url: str,
    timeout_ms: int = 30000,
    sleep=time.sleep,
) -> str:
    """Call the hosted generation endpoint; retries transient failures."""
    url = base_url.rstrip("/") + "/generate"
    headers = {}
    token = os.environ.get(GEN_TOKEN_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "inputs": prompt.prompt_text,
        "parameters": {
            "max_new_tokens": params.max_new_tokens,
            "temperature": params.temperature,
        },
    }
    last_failure = "no attempt made"
    timed_out = False
    for attempt in range(RETRY_ATTEMPTS):
        if attempt:
            sleep(RETRY_BACKOFF_MS[attempt - 1] / 1000.0)
        try:
            resp = requests.post(url, json=body, headers=headers, timeout=timeout_ms / 1000.0)
        except requests.Timeout as exc:
            last_failure = f"timeout: {exc}"
            timed_out = True
            continue
        except requests.RequestException as exc:
            last_failure = f"{type(exc).__name__}: {exc}"
            timed_out = False
            continue
        if resp.status_code != 200:
            last_failure = f"HTTP {resp.status_code}"
            timed_out = False
            continue
        try:
            payload = resp.json()
        except ValueError as exc:
            raise RemoteProtocolError("generate response is not valid JSON") from exc
        if not isinstance(payload, dict) or not isinstance(payload.get("generated_text"), str):
            raise RemoteProtocolError("generate response missing generated_text")
        return payload["generated_text"]
    message = f"generate endpoint failed after {RETRY_ATTEMPTS} attempts ({last_failure})"
    if timed_out:
        raise RemoteTimeoutError(message)
    raise RemoteUnavailableError(message)


def answer(
    question: str,
    store: VectorStore,
    embed_cfg: EmbedderConfig,
    rag_cfg: RagConfig,
    model: RerankModel | None = None,
    k: int | None = None,
) -> AnswerResult:
    """Full pipeline: retrieve, build the prompt, generate, cite."""
    started = time.perf_counter()
    k = rag_cfg.k if k is None else k
    retrieved = retrieve(
        question,
        k,
        rag_cfg.rerank_enabled,
        store,
        embed_cfg,
        model=model,
        max_tokens=rag_cfg.chunk_max_tokens,
    )
    prompt = build_prompt(question, retrieved, rag_cfg.budget_tokens)
    if rag_cfg.backend == "stub":
        text, citation = generate_stub(prompt, question)
        citations = [citation]
    else:
        try:
            text = generate_remote(prompt, rag_cfg.gen, rag_cfg.gen_base_url)
        except (RemoteUnavailableError, RemoteTimeoutError) as exc:
            # callers can still inspect what retrieval produced
            exc.detail["retrieved"] = retrieved
            raise
        citations = list(prompt.included)
    latency_ms = (time.perf_counter() - started) * 1000.0
    return AnswerResult(text, citations, retrieved, rag_cfg.backend, latency_ms)
