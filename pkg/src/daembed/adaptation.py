"""The shallow adaptation layer.

A word's generic and domain-specific projections are interleaved into a 2d
vector and convolved with one 2x1 kernel ``(alpha, beta)`` at stride 2, which
is exactly ``alpha * g + beta * s``. Only the two kernel weights are learned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix
from .kcca import AlignedPairs


@dataclass(frozen=True)
class AdaptationParams:
    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("adaptation weights must be finite")

    @property
    def kernel(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])


def _pair(g, s):
    g = np.asarray(g, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if g.shape != s.shape:
        raise ValueError(f"dimension mismatch: {g.shape} vs {s.shape}")
    return g, s


def interleave(g, s) -> np.ndarray:
    """(g1, s1, g2, s2, ...) along the last axis."""
    g, s = _pair(g, s)
    out = np.empty(g.shape[:-1] + (2 * g.shape[-1],))
    out[..., 0::2] = g
    out[..., 1::2] = s
    return out


def deinterleave(v) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] % 2:
        raise ValueError("interleaved vector must have even length")
    return v[..., 0::2].copy(), v[..., 1::2].copy()


def conv_stride2(p: AdaptationParams, v) -> np.ndarray:
    """Width-2, stride-2 convolution of an interleaved vector (last axis)."""
    v = np.asarray(v, dtype=np.float64)
    windows = v.reshape(v.shape[:-1] + (v.shape[-1] // 2, 2))
    return windows[..., 0] * p.alpha + windows[..., 1] * p.beta


def apply(p: AdaptationParams, g, s) -> np.ndarray:
    g, s = _pair(g, s)
    return conv_stride2(p, interleave(g, s))


def grad(p: AdaptationParams, g, s, upstream) -> tuple[float, float]:
    """(dL/dalpha, dL/dbeta) given dL/d(out); sums over any leading axes."""
    g, s = _pair(g, s)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != g.shape:
        raise ValueError(f"upstream shape {upstream.shape} != {g.shape}")
    return float(np.vdot(upstream, g)), float(np.vdot(upstream, s))


def adapt_matrix(p: AdaptationParams, pairs: AlignedPairs) -> EmbeddingMatrix:
    return EmbeddingMatrix(pairs.vocab, apply(p, pairs.x, pairs.y), "domain_adapted")
