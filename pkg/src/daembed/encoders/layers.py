"""Softmax classifier, cross-entropy and inverted dropout."""
from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def classify(weights: np.ndarray, bias: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Class probabilities ``softmax(W v + b)`` for one vector or a batch."""
    return softmax(np.asarray(v) @ np.asarray(weights).T + bias)


def cross_entropy(probs: np.ndarray, target) -> tuple[float | np.ndarray, np.ndarray]:
    """``-log p[target]`` (p clamped at 1e-12) and its gradient w.r.t. the logits.

    Works on a single distribution or a batch (then per-example losses).
    """
    probs = np.asarray(probs, dtype=np.float64)
    batch = probs.ndim == 2
    p = np.atleast_2d(probs)
    t = np.atleast_1d(np.asarray(target))
    if t.shape[0] != p.shape[0] or np.any(t < 0) or np.any(t >= p.shape[1]):
        raise ValueError(f"invalid class index {target!r} for {p.shape[1]} classes")
    rows = np.arange(p.shape[0])
    loss = -np.log(np.maximum(p[rows, t], 1e-12))
    g = p.copy()
    g[rows, t] -= 1.0
    if batch:
        return loss, g
    return float(loss[0]), g[0]


def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout multiplier: 0 with probability ``rate``, else 1/(1-rate)."""
    if rate <= 0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)
