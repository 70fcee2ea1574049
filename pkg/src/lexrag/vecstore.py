"""Exact top-k cosine store with JSONL persistence and atomic snapshots."""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .embedder import EmbeddingVector
from .errors import CorruptStoreError, DimMismatchError, StoreIoError, StoreLockedError

MANIFEST_NAME = "manifest.json"
RECORDS_NAME = "records.jsonl"
LOCK_NAME = ".lock"
STORE_VERSION = 1
METRIC = "cosine"

# transient manifest/records disagreement during a concurrent save
_LOAD_RETRIES = 3


@dataclass
class VectorRecord:
    record_id: int
    chunk_id: str
    doc_id: str
    path: str
    vector: EmbeddingVector
    text: str
    span: tuple[int, int]
    meta: dict[str, str] = field(default_factory=dict)


@dataclass
class ScoredChunk:
    chunk_id: str
    doc_id: str
    path: str
    text: str
    span: tuple[int, int]
    cosine_score: float
    rerank_score: float | None = None


def _format_float(x: float) -> str:
    # 17 significant digits round-trips any IEEE double exactly
    return format(float(x), ".17g")


def _record_line(rec: VectorRecord) -> str:
    head = json.dumps(
        {
            "record_id": rec.record_id,
            "chunk_id": rec.chunk_id,
            "doc_id": rec.doc_id,
            "path": rec.path,
            "span": [rec.span[0], rec.span[1]],
            "text": rec.text,
            "meta": rec.meta,
        },
        ensure_ascii=False,
    )
    vector = "[" + ",".join(_format_float(v) for v in rec.vector.values) + "]"
    return head[:-1] + ',"vector":' + vector + "}"


def _parse_record(line: str, dim: int, line_no: int) -> VectorRecord:
    try:
        obj = json.loads(line)
        values = [float(v) for v in obj["vector"]]
        if len(values) != dim:
            raise CorruptStoreError(
                f"record line {line_no}: vector dim {len(values)} != store dim {dim}"
            )
        norm = math.sqrt(sum(v * v for v in values))
        return VectorRecord(
            record_id=int(obj["record_id"]),
            chunk_id=str(obj["chunk_id"]),
            doc_id=str(obj["doc_id"]),
            path=str(obj["path"]),
            vector=EmbeddingVector(values, abs(norm - 1.0) <= 1e-9),
            text=str(obj["text"]),
            span=(int(obj["span"][0]), int(obj["span"][1])),
            meta={str(k): str(v) for k, v in obj.get("meta", {}).items()},
        )
    except CorruptStoreError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptStoreError(f"record line {line_no} is malformed: {exc}") from exc


class VectorStore:
    """In-memory record set keyed by chunk_id; one writer, many readers."""

    def __init__(self, dim: int):
        if dim < 1:
            raise DimMismatchError("store dim must be >= 1")
        self.dim = dim
        self._records: dict[str, VectorRecord] = {}
        self._write_lock = threading.Lock()
        self._matrix: np.ndarray | None = None
        self._norms: np.ndarray | None = None
        self._row_ids: list[str] = []

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[VectorRecord]:
        return list(self._records.values())

    def get(self, chunk_id: str) -> VectorRecord | None:
        return self._records.get(chunk_id)

    def doc_count(self) -> int:
        return len({r.doc_id for r in self._records.values()})

    def chunk_ids_for_path(self, path: str) -> list[str]:
        return [r.chunk_id for r in self._records.values() if r.path == path]

    def next_record_id(self) -> int:
        if not self._records:
            return 0
        return max(r.record_id for r in self._records.values()) + 1

    def upsert(self, records: list[VectorRecord]) -> int:
        """Replace records sharing a chunk_id, append the rest; all-or-nothing."""
        for rec in records:
            if rec.vector.dim != self.dim:
                raise DimMismatchError(
                    f"record {rec.chunk_id}: dim {rec.vector.dim} != store dim {self.dim}"
                )
        with self._write_lock:
            for rec in records:
                self._records[rec.chunk_id] = rec
            self._matrix = None
        return len(records)

    def _ensure_matrix(self):
        if self._matrix is None:
            recs = list(self._records.values())
            self._row_ids = [r.chunk_id for r in recs]
            if recs:
                self._matrix = np.array([r.vector.values for r in recs], dtype=np.float64)
            else:
                self._matrix = np.zeros((0, self.dim), dtype=np.float64)
            self._norms = np.linalg.norm(self._matrix, axis=1)

    def top_k(
        self,
        query: EmbeddingVector,
        k: int,
        meta_filter: Callable[[dict[str, str]], bool] | None = None,
    ) -> list[ScoredChunk]:
        """Exact cosine ranking, ties broken by chunk_id ascending."""
        if query.dim != self.dim:
            raise DimMismatchError(f"query dim {query.dim} != store dim {self.dim}")
        if k <= 0 or not self._records:
            return []
        self._ensure_matrix()
        q = np.asarray(query.values, dtype=np.float64)
        q_norm = float(np.linalg.norm(q))
        if q_norm == 0.0:
            scores = np.zeros(len(self._row_ids))
        else:
            dots = self._matrix @ q
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = np.where(
                    self._norms > 0.0, dots / (self._norms * q_norm), 0.0
                )
        candidates = []
        for i, chunk_id in enumerate(self._row_ids):
            rec = self._records[chunk_id]
            if meta_filter is not None and not meta_filter(rec.meta):
                continue
            candidates.append((float(scores[i]), chunk_id))
        candidates.sort(key=lambda t: (-t[0], t[1]))
        out = []
        for score, chunk_id in candidates[:k]:
            rec = self._records[chunk_id]
            out.append(
                ScoredChunk(
                    chunk_id=rec.chunk_id,
                    doc_id=rec.doc_id,
                    path=rec.path,
                    text=rec.text,
                    span=rec.span,
                    cosine_score=score,
                )
            )
        return out

    # -- persistence ----------------------------------------------------

    def save(self, directory: str):
        """Atomic snapshot: records renamed first, manifest renamed last."""
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as exc:
            raise StoreIoError(f"cannot create {directory}: {exc}") from exc

        lock_path = os.path.join(directory, LOCK_NAME)
        try:
            lock_fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StoreLockedError(f"another writer holds {lock_path}") from None
        except OSError as exc:
            raise StoreIoError(f"cannot lock {directory}: {exc}") from exc

        try:
            records_tmp = os.path.join(directory, RECORDS_NAME + ".tmp")
            manifest_tmp = os.path.join(directory, MANIFEST_NAME + ".tmp")
            try:
                with open(records_tmp, "w", encoding="utf-8") as fh:
                    for rec in self._records.values():
                        fh.write(_record_line(rec))
                        fh.write("\n")
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(records_tmp, os.path.join(directory, RECORDS_NAME))
                self._save_pause_hook()
                manifest = {
                    "version": STORE_VERSION,
                    "dim": self.dim,
                    "metric": METRIC,
                    "count": len(self._records),
                }
                with open(manifest_tmp, "w", encoding="utf-8") as fh:
                    json.dump(manifest, fh)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(manifest_tmp, os.path.join(directory, MANIFEST_NAME))
            except OSError as exc:
                raise StoreIoError(f"snapshot write failed: {exc}") from exc
        finally:
            os.close(lock_fd)
            try:
                os.unlink(lock_path)
            except OSError:
                pass

    def _save_pause_hook(self):
        """Test seam between the two renames; no-op in production."""

    @classmethod
    def load(cls, directory: str) -> "VectorStore":
        last_error: CorruptStoreError | None = None
        for _ in range(_LOAD_RETRIES):
            try:
                return cls._load_once(directory)
            except CorruptStoreError as exc:
                # a concurrent save may leave a transient mismatch; retry
                last_error = exc
        raise last_error

    @classmethod
    def _load_once(cls, directory: str) -> "VectorStore":
        manifest_path = os.path.join(directory, MANIFEST_NAME)
        records_path = os.path.join(directory, RECORDS_NAME)
        if not os.path.exists(manifest_path):
            raise CorruptStoreError(f"missing manifest in {directory}")
        try:
            with open(manifest_path, encoding="utf-8") as fh:
                manifest = json.load(fh)
        except (OSError, ValueError) as exc:
            raise CorruptStoreError(f"unreadable manifest: {exc}") from exc
        if not isinstance(manifest, dict) or manifest.get("version") != STORE_VERSION:
            raise CorruptStoreError("bad manifest version")
        if manifest.get("metric") != METRIC:
            raise CorruptStoreError("unsupported metric")
        dim = manifest.get("dim")
        count = manifest.get("count")
        if not isinstance(dim, int) or dim < 1 or not isinstance(count, int) or count < 0:
            raise CorruptStoreError("bad manifest dim/count")

        try:
            with open(records_path, encoding="utf-8") as fh:
                lines = [ln for ln in fh.read().split("\n") if ln.strip()]
        except OSError as exc:
            raise CorruptStoreError(f"missing records file: {exc}") from exc
        if len(lines) != count:
            raise CorruptStoreError(
                f"manifest count {count} != {len(lines)} record lines"
            )
        store = cls(dim)
        for i, line in enumerate(lines, start=1):
            rec = _parse_record(line, dim, i)
            store._records[rec.chunk_id] = rec
        return store


def exists(directory: str) -> bool:
    return os.path.exists(os.path.join(directory, MANIFEST_NAME))
