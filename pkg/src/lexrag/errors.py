"""Typed errors shared across the pipeline.

Every error carries a stable ``kind`` string which the REST layer echoes in
its uniform ``{"error": {"kind", "message"}}`` body.
"""

from __future__ import annotations


class LexragError(Exception):
    """Base class for all lexrag errors."""

    kind = "internal"

    def __init__(self, message: str = "", detail: dict | None = None):
        super().__init__(message or self.__class__.__name__)
        self.detail = detail if detail is not None else {}


# ingest
class MalformedPdfError(LexragError):
    kind = "malformed_pdf"


class EncryptedPdfError(LexragError):
    kind = "encrypted_pdf"


class NoTextLayerError(LexragError):
    kind = "no_text_layer"


class EmptyDocumentError(LexragError):
    kind = "empty_document"


# configuration
class InvalidConfigError(LexragError):
    kind = "invalid_config"


# embedder / remote backends
class RemoteUnavailableError(LexragError):
    kind = "remote_unavailable"


class RemoteProtocolError(LexragError):
    kind = "remote_protocol"


class RemoteTimeoutError(LexragError):
    kind = "remote_timeout"


class DimMismatchError(LexragError):
    kind = "dim_mismatch"


# vector store
class StoreLockedError(LexragError):
    kind = "store_locked"


class CorruptStoreError(LexragError):
    kind = "corrupt_store"


class StoreIoError(LexragError):
    kind = "io_failure"


# numeric kernels / training
class EmptyInputError(LexragError):
    kind = "empty_input"


class ShapeMismatchError(LexragError):
    kind = "shape_mismatch"


class InvalidDistributionError(LexragError):
    kind = "invalid_distribution"


class EmptyDatasetError(LexragError):
    kind = "empty_dataset"


class NonFiniteLossError(LexragError):
    kind = "non_finite_loss"


# rag orchestration
class EmptyIndexError(LexragError):
    kind = "empty_index"


class BudgetTooSmallError(LexragError):
    kind = "budget_too_small"


class NoContextError(LexragError):
    kind = "no_context"


# evaluation
class EmptyRelevantError(LexragError):
    kind = "empty_relevant"


class EmptyGoldSetError(LexragError):
    kind = "empty_gold_set"
