"""Text embeddings: deterministic local feature hashing or a remote service."""

from __future__ import annotations

import logging
import math
import os
import re
import time
from collections import Counter
from dataclasses import dataclass

import requests

from .errors import (
    DimMismatchError,
    InvalidConfigError,
    RemoteProtocolError,
    RemoteUnavailableError,
)

logger = logging.getLogger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_MS = (500, 1000, 2000)

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

EMBED_TOKEN_ENV = "LEXRAG_EMBED_TOKEN"


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; bit-exact across platforms."""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@dataclass
class EmbeddingVector:
    values: list[float]
    normalized: bool

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass
class EmbedderConfig:
    provider: str = "local_hashed"  # local_hashed | remote
    dim: int = 256
    remote_base_url: str | None = None
    timeout_ms: int = 10000
    max_batch: int = 32

    def __post_init__(self):
        if self.provider not in ("local_hashed", "remote"):
            raise InvalidConfigError(f"unknown embedding provider {self.provider!r}")
        if self.dim < 8:
            raise InvalidConfigError("dim must be >= 8")
        if self.provider == "remote" and not self.remote_base_url:
            raise InvalidConfigError("remote provider requires remote_base_url")
        if self.timeout_ms <= 0 or self.max_batch <= 0:
            raise InvalidConfigError("timeout_ms and max_batch must be positive")


def text_tokens(text: str) -> list[str]:
    """Split on non-alphanumeric characters, dropping empties."""
    return _WORD_RE.findall(text)


def embed_tokens_hashed(tokens: list[str], dim: int) -> EmbeddingVector:
    """Signed feature hashing with sublinear term frequency.

    Each distinct lowercased token lands at FNV-1a64 mod dim with a sign
    from the hash's top bit and weight 1+ln(count); the result is
    L2-normalized unless it is all zeros.
    """
    if dim < 8:
        raise InvalidConfigError("dim must be >= 8")
    counts = Counter(t.lower() for t in tokens)
    values = [0.0] * dim
    # sorted iteration keeps float accumulation order canonical
    for token, count in sorted(counts.items()):
        h = fnv1a64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        values[h % dim] += sign * (1.0 + math.log(count))
    norm = math.sqrt(sum(v * v for v in values))
    if norm > 0.0:
        return EmbeddingVector([v / norm for v in values], True)
    return EmbeddingVector(values, False)


def _is_unit(values: list[float]) -> bool:
    return abs(math.sqrt(sum(v * v for v in values)) - 1.0) <= 1e-9


def _auth_headers(env_var: str) -> dict[str, str]:
    token = os.environ.get(env_var)
    return {"Authorization": f"Bearer {token}"} if token else {}


def _remote_embed(texts: list[str], cfg: EmbedderConfig, sleep=time.sleep) -> list[EmbeddingVector]:
    url = cfg.remote_base_url.rstrip("/") + "/embed"
    headers = _auth_headers(EMBED_TOKEN_ENV)
    last_failure = "no attempt made"
    for attempt in range(RETRY_ATTEMPTS):
        if attempt:
            sleep(RETRY_BACKOFF_MS[attempt - 1] / 1000.0)
        try:
            resp = requests.post(
                url, json={"inputs": texts}, headers=headers,
                timeout=cfg.timeout_ms / 1000.0,
            )
        except requests.RequestException as exc:
            last_failure = f"{type(exc).__name__}: {exc}"
            continue
        if resp.status_code != 200:
            last_failure = f"HTTP {resp.status_code}"
            continue
        try:
            body = resp.json()
        except ValueError as exc:
            raise RemoteProtocolError("embed response is not valid JSON") from exc
        rows = body.get("embeddings") if isinstance(body, dict) else None
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise RemoteProtocolError("embed response missing one row per input")
        out = []
        for row in rows:
            if not isinstance(row, list) or not all(isinstance(v, (int, float)) for v in row):
                raise RemoteProtocolError("embed response row is not a number list")
            if len(row) != cfg.dim:
                raise DimMismatchError(
                    f"remote returned dim {len(row)}, expected {cfg.dim}"
                )
            values = [float(v) for v in row]
            out.append(EmbeddingVector(values, _is_unit(values)))
        return out
    raise RemoteUnavailableError(
        f"embed endpoint failed after {RETRY_ATTEMPTS} attempts ({last_failure})"
    )


def embed_text(text: str, cfg: EmbedderConfig, sleep=time.sleep) -> EmbeddingVector:
    if cfg.provider == "local_hashed":
        return embed_tokens_hashed(text_tokens(text), cfg.dim)
    return _remote_embed([text], cfg, sleep=sleep)[0]


def embed_batch(texts: list[str], cfg: EmbedderConfig, sleep=time.sleep) -> list[EmbeddingVector]:
    """Order-preserving batch embedding; any failure fails the whole batch."""
    if cfg.provider == "local_hashed":
        return [embed_tokens_hashed(text_tokens(t), cfg.dim) for t in texts]
    out: list[EmbeddingVector] = []
    for i in range(0, len(texts), cfg.max_batch):
        out.extend(_remote_embed(texts[i:i + cfg.max_batch], cfg, sleep=sleep))
    return out
