"""Attention-pool scoring and the trainable logistic re-ranker."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..embedder import embed_tokens_hashed, text_tokens
from ..errors import (
    EmptyDatasetError,
    InvalidConfigError,
    NonFiniteLossError,
    ShapeMismatchError,
)
from ..vecstore import ScoredChunk
from .kernels import AttentionInput, attention, sgd_step

logger = logging.getLogger(__name__)

FEATURE_NAMES = ["cosine_pooled", "attention_pool", "jaccard", "len_norm"]
N_FEATURES = 4
MODEL_VERSION = 1
_CLAMP = 1e-12


@dataclass
class RerankModel:
    w: np.ndarray
    b: float
    feature_names: list[str] = field(default_factory=lambda: list(FEATURE_NAMES))

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.shape != (N_FEATURES,):
            raise ShapeMismatchError(f"weights must have length {N_FEATURES}")
        if not (np.all(np.isfinite(self.w)) and math.isfinite(self.b)):
            raise InvalidConfigError("model parameters must be finite")


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 16
    seed: int = 42
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidConfigError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfigError("epochs and batch_size must be positive")


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def token_vectors(tokens: list[str], dim: int) -> np.ndarray:
    """One hashed embedding row per token (unit or zero rows)."""
    if not tokens:
        return np.zeros((0, dim), dtype=np.float64)
    return np.array(
        [embed_tokens_hashed([tok], dim).values for tok in tokens], dtype=np.float64
    )


def attention_pool(question_vecs: np.ndarray, chunk_vecs: np.ndarray) -> float:
    """Mean agreement of each query token with its attention-weighted chunk mix."""
    m = question_vecs.shape[0]
    n = chunk_vecs.shape[0]
    if m == 0 or n == 0:
        logger.warning("attention_pool over empty text; scoring 0")
        return 0.0
    pooled = attention(AttentionInput(question_vecs, chunk_vecs, chunk_vecs))
    return float(np.mean(np.sum(question_vecs * pooled, axis=1)))


def jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def features(
    question_tokens: list[str],
    cand: ScoredChunk,
    pooled_q=None,
    *,
    dim: int = 256,
    max_tokens: int = 180,
) -> np.ndarray:
    """Four re-ranking features for one candidate chunk."""
    chunk_tokens = text_tokens(cand.text)
    f1 = cand.cosine_score
    f2 = attention_pool(
        token_vectors(question_tokens, dim), token_vectors(chunk_tokens, dim)
    )
    f3 = jaccard(
        {t.lower() for t in question_tokens}, {t.lower() for t in chunk_tokens}
    )
    token_count = len(cand.text.split())
    f4 = math.log1p(token_count) / math.log1p(max_tokens)
    return np.array([f1, f2, f3, f4], dtype=np.float64)


def train_reranker(
    dataset: list[tuple], cfg: TrainConfig
) -> tuple[RerankModel, list[float]]:
    """Mini-batch SGD on binary cross-entropy over a logistic model.

    Gradients are averaged within each batch, parameters start at zero, and
    shuffling is driven by the seeded generator. Returns the model and the
    mean per-example loss of each epoch.
    """
    if not dataset:
        raise EmptyDatasetError("training dataset is empty")
    x = np.array([np.asarray(f, dtype=np.float64) for f, _ in dataset])
    y = np.array([float(label) for _, label in dataset])
    if x.ndim != 2 or x.shape[1] != N_FEATURES:
        raise ShapeMismatchError(f"features must have length {N_FEATURES}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise InvalidConfigError("labels must be 0 or 1")

    n = len(y)
    rng = np.random.default_rng(cfg.seed)
    theta = np.zeros(N_FEATURES + 1)  # w then b
    history: list[float] = []

    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            p = sigmoid(xb @ theta[:N_FEATURES] + theta[N_FEATURES])
            losses = -(
                yb * np.log(np.clip(p, _CLAMP, 1.0))
                + (1.0 - yb) * np.log(np.clip(1.0 - p, _CLAMP, 1.0))
            )
            if not np.all(np.isfinite(losses)):
                raise NonFiniteLossError("training loss diverged")
            epoch_loss += float(losses.sum())
            residual = p - yb
            grad_w = (residual[:, None] * xb).mean(axis=0)
            grad_b = residual.mean()
            theta = sgd_step(theta, np.append(grad_w, grad_b), cfg.learning_rate)
            if not np.all(np.isfinite(theta)):
                raise NonFiniteLossError("parameters diverged")
        history.append(epoch_loss / n)

    model = RerankModel(w=theta[:N_FEATURES], b=float(theta[N_FEATURES]))
    return model, history


def score_candidates(
    candidates: list[ScoredChunk],
    question: str,
    model: RerankModel | None = None,
    *,
    dim: int = 256,
    max_tokens: int = 180,
) -> list[ScoredChunk]:
    """Attach rerank scores and sort descending, ties by chunk_id.

    With a model the score is the logistic probability over the features;
    without one it falls back to the attention-pool score alone.
    """
    question_tokens = text_tokens(question)
    q_vecs = token_vectors(question_tokens, dim)
    rescored = []
    for cand in candidates:
        if model is not None:
            f = features(question_tokens, cand, dim=dim, max_tokens=max_tokens)
            score = float(sigmoid(np.dot(model.w, f) + model.b))
        else:
            score = attention_pool(q_vecs, token_vectors(text_tokens(cand.text), dim))
        rescored.append(replace(cand, rerank_score=score))
    rescored.sort(key=lambda c: (-c.rerank_score, c.chunk_id))
    return rescored


# keep the operation name from the interface contract
rerank = score_candidates


def save_model(model: RerankModel, path: str):
    payload = {
        "version": MODEL_VERSION,
        "w": [float(v) for v in model.w],
        "b": float(model.b),
        "features": list(model.feature_names),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path: str) -> RerankModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != MODEL_VERSION:
        raise InvalidConfigError("unsupported reranker model version")
    return RerankModel(
        w=np.array([float(v) for v in payload["w"]]),
        b=float(payload["b"]),
        feature_names=[str(s) for s in payload.get("features", FEATURE_NAMES)],
    )


def _cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def load_training_file(
    path: str, store=None, embed_cfg=None, max_tokens: int = 180
) -> list[tuple[np.ndarray, int]]:
    """Read training examples: precomputed features or (question, chunk_id).

    The second form needs an open index and embedder config so features can
    be computed against the stored chunk.
    """
    from ..embedder import embed_text  # local: avoids import at module load

    dataset: list[tuple[np.ndarray, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            label = obj.get("label")
            if label not in (0, 1):
                raise InvalidConfigError(f"line {line_no}: label must be 0 or 1")
            if "features" in obj:
                values = [float(v) for v in obj["features"]]
                if len(values) != N_FEATURES:
                    raise InvalidConfigError(
                        f"line {line_no}: expected {N_FEATURES} features"
                    )
                dataset.append((np.array(values), label))
                continue
            question = obj.get("question")
            chunk_id = obj.get("chunk_id")
            if not question or not chunk_id:
                raise InvalidConfigError(
                    f"line {line_no}: need features or question+chunk_id"
                )
            if store is None or embed_cfg is None:
                raise InvalidConfigError(
                    "question/chunk_id examples require an open index"
                )
            rec = store.get(chunk_id)
            if rec is None:
                raise InvalidConfigError(f"line {line_no}: unknown chunk {chunk_id}")
            query = embed_text(question, embed_cfg)
            cand = ScoredChunk(
                chunk_id=rec.chunk_id,
                doc_id=rec.doc_id,
                path=rec.path,
                text=rec.text,
                span=rec.span,
                cosine_score=_cosine(query.values, rec.vector.values),
            )
            f = features(
                text_tokens(question), cand, dim=embed_cfg.dim, max_tokens=max_tokens
            )
            dataset.append((f, label))
    return dataset
