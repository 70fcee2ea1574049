"""Numeric kernels: softmax, scaled dot-product attention, cross-entropy, SGD."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import (
    EmptyInputError,
    InvalidConfigError,
    InvalidDistributionError,
    ShapeMismatchError,
)

PROB_CLAMP = 1e-12


def softmax(x) -> np.ndarray:
    """Shift-invariant softmax of a 1-D vector."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError("softmax of empty vector")
    if arr.ndim != 1:
        raise ShapeMismatchError("softmax expects a 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistributionError("softmax input must be finite")
    shifted = np.exp(arr - arr.max())
    return shifted / shifted.sum()


@dataclass
class AttentionInput:
    """Queries, keys, and values with the key dimensionality used for scaling."""

    q: np.ndarray  # m x d
    k: np.ndarray  # n x d
    v: np.ndarray  # n x d
    d_k: int | None = None

    def __post_init__(self):
        self.q = np.atleast_2d(np.asarray(self.q, dtype=np.float64))
        self.k = np.atleast_2d(np.asarray(self.k, dtype=np.float64))
        self.v = np.atleast_2d(np.asarray(self.v, dtype=np.float64))
        if self.d_k is None:
            self.d_k = self.q.shape[1]
        if self.q.shape[1] != self.k.shape[1]:
            raise ShapeMismatchError("query and key dims differ")
        if self.k.shape[0] != self.v.shape[0]:
            raise ShapeMismatchError("key and value row counts differ")
        if self.k.shape[0] == 0 or self.q.shape[0] == 0:
            raise ShapeMismatchError("attention requires at least one query and one key")
        if self.d_k <= 0:
            raise ShapeMismatchError("d_k must be positive")
        for mat in (self.q, self.k, self.v):
            if not np.all(np.isfinite(mat)):
                raise InvalidDistributionError("attention inputs must be finite")


def attention(inp: AttentionInput) -> np.ndarray:
    """softmax(Q K^T / sqrt(d_k)) V, softmax applied per query row."""
    scores = inp.q @ inp.k.T / math.sqrt(inp.d_k)
    shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
    weights = shifted / shifted.sum(axis=1, keepdims=True)
    return weights @ inp.v


@dataclass
class LossSample:
    """Predicted class distribution with its one-hot target."""

    p: np.ndarray
    y: np.ndarray
    c: int | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.c is None:
            self.c = self.p.size
        if self.p.ndim != 1 or self.y.ndim != 1 or self.p.size != self.y.size:
            raise ShapeMismatchError("p and y must be 1-D vectors of equal length")
        if self.p.size != self.c:
            raise ShapeMismatchError("class count does not match vector length")
        if np.any(self.p < 0) or abs(self.p.sum() - 1.0) > 1e-9:
            raise InvalidDistributionError("p must be a probability vector")
        ones = self.y == 1.0
        if ones.sum() != 1 or not np.all(ones | (self.y == 0.0)):
            raise InvalidDistributionError("y must be one-hot")


def cross_entropy(sample: LossSample) -> float:
    """-sum(y_i ln p_i); probabilities clamped to [1e-12, 1] before the log."""
    p = np.clip(sample.p, PROB_CLAMP, 1.0)
    return float(-(sample.y * np.log(p)).sum())


def sgd_step(theta, grad, alpha: float) -> np.ndarray:
    """theta_{t+1} = theta_t - alpha * grad."""
    t = np.asarray(theta, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if t.shape != g.shape:
        raise ShapeMismatchError(f"theta shape {t.shape} != grad shape {g.shape}")
    if alpha <= 0:
        raise InvalidConfigError("learning rate must be positive")
    return t - alpha * g
