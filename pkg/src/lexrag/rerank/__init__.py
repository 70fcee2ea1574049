from .kernels import (
    AttentionInput,
    LossSample,
    attention,
    cross_entropy,
    sgd_step,
    softmax,
)
from .reranker import (
    FEATURE_NAMES,
    RerankModel,
    TrainConfig,
    attention_pool,
    features,
    jaccard,
    load_model,
    load_training_file,
    rerank,
    save_model,
    score_candidates,
    sigmoid,
    token_vectors,
    train_reranker,
)

__all__ = [
    "AttentionInput",
    "FEATURE_NAMES",
    "LossSample",
    "RerankModel",
    "TrainConfig",
    "attention",
    "attention_pool",
    "cross_entropy",
    "features",
    "jaccard",
    "load_model",
    "load_training_file",
    "rerank",
    "save_model",
    "score_candidates",
    "sgd_step",
    "sigmoid",
    "softmax",
    "token_vectors",
    "train_reranker",
]
