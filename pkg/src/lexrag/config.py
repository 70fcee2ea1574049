"""Configuration loading: flags override the config file, which overrides defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .chunker import ChunkConfig
from .embedder import EmbedderConfig
from .errors import InvalidConfigError
from .ingest.structure import HeadingGrammar
from .rag import GenParams, RagConfig
from .rerank import TrainConfig

API_TOKEN_ENV = "LEXRAG_API_TOKEN"


@dataclass
class ServerConfig:
    bind_addr: str = "127.0.0.1:8080"
    index_dir: str = ""
    auth_token: str | None = None  # populated from the environment only
    static_dir: str | None = None
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    chunk: ChunkConfig = field(default_factory=ChunkConfig)
    rag: RagConfig = field(default_factory=RagConfig)
    grammar: HeadingGrammar = field(default_factory=HeadingGrammar.from_patterns)

    @property
    def host(self) -> str:
        return self.bind_addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        try:
            return int(self.bind_addr.rsplit(":", 1)[1])
        except (IndexError, ValueError):
            raise InvalidConfigError(f"bad bind_addr {self.bind_addr!r}") from None


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidConfigError("config file must hold a JSON object")
    return data


def _merged(section: dict | None, overrides: dict) -> dict:
    out = dict(section or {})
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def build_embedder_config(raw: dict, **overrides) -> EmbedderConfig:
    return EmbedderConfig(**_merged(raw.get("embedder"), overrides))


def build_chunk_config(raw: dict, **overrides) -> ChunkConfig:
    return ChunkConfig(**_merged(raw.get("chunk"), overrides))


def build_train_config(raw: dict, **overrides) -> TrainConfig:
    return TrainConfig(**_merged(raw.get("train"), overrides))


def build_rag_config(raw: dict, **overrides) -> RagConfig:
    merged = _merged(raw.get("rag"), overrides)
    gen_fields = {
        k: merged.pop(k) for k in ("max_new_tokens", "temperature") if k in merged
    }
    gen = GenParams(**gen_fields)
    return RagConfig(gen=gen, **merged)


def build_grammar(raw: dict) -> HeadingGrammar:
    return HeadingGrammar.from_patterns(raw.get("heading_patterns"))


def build_server_config(raw: dict, **overrides) -> ServerConfig:
    top = {
        k: v
        for k, v in raw.items()
        if k in ("bind_addr", "index_dir", "static_dir")
    }
    top.update({k: v for k, v in overrides.items() if v is not None})
    if not top.get("index_dir"):
        raise InvalidConfigError("index_dir is required")
    return ServerConfig(
        bind_addr=top.get("bind_addr", "127.0.0.1:8080"),
        index_dir=top["index_dir"],
        auth_token=os.environ.get(API_TOKEN_ENV) or None,
        static_dir=top.get("static_dir"),
        embedder=build_embedder_config(raw),
        chunk=build_chunk_config(raw),
        rag=build_rag_config(raw),
        grammar=build_grammar(raw),
    )
