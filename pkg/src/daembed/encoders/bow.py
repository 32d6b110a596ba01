"""Bag-of-words encoder: raw-count weighted sum of word vectors."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..embeddings import EmbeddingMatrix


def bow_encode(doc: Sequence[str], emb: EmbeddingMatrix) -> np.ndarray:
    """Sum of the rows of the tokens in ``doc``; OOV tokens are skipped."""
    out = np.zeros(emb.dim)
    for tok in doc:
        i = emb.vocab.index.get(tok)
        if i is not None:
            out += emb.vectors[i]
    return out


def bow_forward(x: np.ndarray, lengths: np.ndarray):
    """Batch version on padded (B, T, d) input whose padding rows are zero."""
    return x.sum(axis=1), (x.shape, lengths)


def bow_backward(cache, upstream: np.ndarray):
    shape, lengths = cache
    mask = (np.arange(shape[1])[None, :] < lengths[:, None]).astype(upstream.dtype)
    return {}, upstream[:, None, :] * mask[:, :, None]
